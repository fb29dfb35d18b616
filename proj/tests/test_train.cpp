// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "test_util.hpp"
#include "tsanet/checkpoint.hpp"
#include "tsanet/error.hpp"
#include "tsanet/ops.hpp"
#include "tsanet/pnm.hpp"
#include "tsanet/train.hpp"

using namespace tsanet;
using namespace tsanet::testing;

namespace {

TrainData toy_data() {
  TrainData d;
  d.images = {procedural_image(48, 48, 11), procedural_image(48, 48, 12)};
  return d;
}

TrainConfig toy_train() {
  TrainConfig c;
  c.patch_size = 16;
  c.batch_size = 1;
  c.iterations = 150;
  c.split = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  c.lr_start = 2e-3;
  c.lr_end = 1e-5;
  return c;
}

double mean_of(const std::vector<double>& v, std::size_t from, std::size_t to) {
  double s = 0;
  for (auto i = from; i < to; ++i) s += v[i];
  return s / static_cast<double>(to - from);
}

std::vector<float> snapshot(const ParamStore<float>& p, const std::string& prefix) {
  std::vector<float> out;
  for (const auto& e : p.entries())
    if (e.name.starts_with(prefix))
      for (float v : e.value.data()) out.push_back(v);
  return out;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("tsanet_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("charbonnier values and gradient") {
  auto a = Tensor<double>::from_data({1, 1, 1, 1}, {0.5}, true);
  auto b = Tensor<double>::from_data({1, 1, 1, 1}, {0.5});
  auto l = ops::charbonnier(a, b, 1e-3);
  CHECK(l.item() == doctest::Approx(1e-3).epsilon(1e-12));
  l.backward();
  CHECK(a.grad()[0] == 0.0);

  auto c = Tensor<double>::from_data({1, 1, 1, 1}, {0.003});
  auto z = Tensor<double>::from_data({1, 1, 1, 1}, {0.0});
  CHECK(ops::charbonnier(c, z, 1e-3).item() == doctest::Approx(3.16228e-3).epsilon(1e-5));
}

TEST_CASE("cosine schedule") {
  CHECK(cosine_lr(0, 1000, 2e-4, 1e-7) == doctest::Approx(2e-4));
  CHECK(cosine_lr(1000, 1000, 2e-4, 1e-7) == doctest::Approx(1e-7));
  CHECK(cosine_lr(500, 1000, 2e-4, 1e-7) == doctest::Approx(1.00005e-4));
  CHECK_THROWS_AS(cosine_lr(1001, 1000, 2e-4, 1e-7), ValueError);
  CHECK_THROWS_AS(cosine_lr(-1, 1000, 2e-4, 1e-7), ValueError);
  double prev = 1.0;
  for (int t = 0; t <= 100; ++t) {
    const double lr = cosine_lr(t, 100, 2e-4, 1e-7);
    CHECK(lr <= prev);
    prev = lr;
  }
}

TEST_CASE("phase budgets and parsing") {
  TrainConfig c;
  c.iterations = 1000;
  CHECK(c.phase_iterations(Phase::kPretrainQ2Q) == 250);
  CHECK(c.phase_iterations(Phase::kPretrainQ2R) == 250);
  CHECK(c.phase_iterations(Phase::kJoint) == 500);
  CHECK(parse_phase("pretrain_q2q") == Phase::kPretrainQ2Q);
  CHECK(phase_name(Phase::kJoint) == "joint");
  CHECK_THROWS_AS(parse_phase("warmup"), ConfigError);
  CHECK_THROWS_AS(parse_loss_mode("triple"), ConfigError);
  c.split = {0.5, 0.5, 0.5};
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("adam first step moves each weight by lr against the gradient sign") {
  ParamStore<float> store(1);
  auto w = store.add("w", {4}, std::vector<double>{0.0, 1.0, -1.0, 2.0});
  const std::vector<float> grads = {0.5f, -2.0f, 1e-3f, 0.0f};
  for (std::size_t i = 0; i < 4; ++i) w.grad()[i] = grads[i];
  AdamState st;
  TrainConfig c;
  adam_step(store, {"w"}, st, 1e-3, c);
  CHECK(w.data()[0] == doctest::Approx(-1e-3).epsilon(1e-4));
  CHECK(w.data()[1] == doctest::Approx(1.0 + 1e-3).epsilon(1e-4));
  CHECK(w.data()[2] == doctest::Approx(-1.0 - 1e-3 * (1e-3 / (1e-3 + 1e-8))).epsilon(1e-4));
  CHECK(w.data()[3] == 2.0f);  // zero gradient, zero update
  CHECK(st.step == 1);
}

TEST_CASE("gradient clipping") {
  ParamStore<float> store(1);
  auto w = store.add("w", {2}, std::vector<double>{0.0, 0.0});
  w.grad()[0] = 3.0f;
  w.grad()[1] = 4.0f;
  CHECK(clip_grad_norm(store, {"w"}, 1.0) == doctest::Approx(5.0));
  CHECK(w.grad()[0] == doctest::Approx(0.6));
  CHECK(w.grad()[1] == doctest::Approx(0.8));
}

TEST_CASE("batches are a pure function of (seed, iteration)") {
  const auto data = toy_data();
  const auto a = draw_batch(data, 16, 2, 5, 7), b = draw_batch(data, 16, 2, 5, 7), c = draw_batch(data, 16, 2, 5, 8);
  CHECK(a[0].rgb.data == b[0].rgb.data);
  CHECK(a[1].degraded.data == b[1].degraded.data);
  CHECK(a[0].rgb.data != c[0].rgb.data);
  CHECK_THROWS_AS(draw_batch(data, 64, 1, 0, 0), ValueError);
}

TEST_CASE("pretraining reduces the loss and leaves the other stage untouched") {
  const auto data = toy_data();
  for (Phase phase : {Phase::kPretrainQ2Q, Phase::kPretrainQ2R}) {
    CAPTURE(phase_name(phase));
    TsaNet<float> net(ModelConfig::preset("toy"));
    const std::string other = phase == Phase::kPretrainQ2Q ? "q2r." : "q2q.";
    const auto before = snapshot(net.params(), other);
    Trainer tr(net, toy_train(), data, phase, 3);
    std::vector<double> losses;
    while (!tr.done()) losses.push_back(tr.step().loss_final);
    REQUIRE(losses.size() == 50);
    CHECK(mean_of(losses, 40, 50) < mean_of(losses, 0, 10));
    CHECK(snapshot(net.params(), other) == before);
  }
}

TEST_CASE("frozen prefixes stay bit-identical in joint training; dual mode logs both terms") {
  const auto data = toy_data();
  TsaNet<float> net(ModelConfig::preset("toy"));
  auto cfg = toy_train();
  cfg.freeze = {"q2q."};
  cfg.loss_mode = LossMode::kDual;
  const auto q2q = snapshot(net.params(), "q2q."), q2r = snapshot(net.params(), "q2r.");
  Trainer tr(net, cfg, data, Phase::kJoint, 4);
  tr.set_total(3);
  for (int i = 0; i < 3; ++i) {
    const auto log = tr.step();
    CHECK(log.loss_q2q >= 0.0);
    CHECK(log.iter == i + 1);
  }
  CHECK(snapshot(net.params(), "q2q.") == q2q);
  CHECK(snapshot(net.params(), "q2r.") != q2r);

  TsaNet<float> net2(ModelConfig::preset("toy"));
  Trainer single(net2, toy_train(), data, Phase::kJoint, 4);
  CHECK(single.step().loss_q2q < 0.0);
}

TEST_CASE("log rows follow the header schema") {
  CHECK(log_header() == "iter,phase,lr,loss_final,loss_q2q_optional,wall_ms");
  StepLog s;
  s.iter = 3;
  s.phase = Phase::kPretrainQ2R;
  s.lr = 1e-4;
  s.loss_final = 0.25;
  s.wall_ms = 1.5;
  CHECK(log_row(s) == "3,pretrain_q2r,0.0001,0.25,,1.500");
  s.loss_q2q = 0.5;
  CHECK(log_row(s) == "3,pretrain_q2r,0.0001,0.25,0.5,1.500");
}

TEST_CASE("checkpoints round-trip byte-exactly and resume bit-exactly") {
  const auto data = toy_data();
  const auto cfg = toy_train();
  const nlohmann::json cj = {{"note", "test"}};

  // Reference: 4 uninterrupted steps.
  TsaNet<float> ref(ModelConfig::preset("toy"));
  Trainer rt(ref, cfg, data, Phase::kPretrainQ2R, 9);
  std::vector<double> ref_losses;
  for (int i = 0; i < 4; ++i) ref_losses.push_back(rt.step().loss_final);

  // Interrupted after 2 steps, saved, reloaded into a fresh net.
  TsaNet<float> a(ModelConfig::preset("toy"));
  Trainer at(a, cfg, data, Phase::kPretrainQ2R, 9);
  at.step();
  at.step();
  const auto dir = temp_dir("ckpt");
  const auto path = dir / "a.ckpt";
  save_checkpoint(make_checkpoint(a, cj, "pretrain_q2r", at.iteration(), &at.adam()), path);
  const auto bytes = read_file(path);

  const auto loaded = load_checkpoint(path);
  CHECK(loaded.iteration == 2);
  CHECK(loaded.adam_step == 2);
  CHECK(encode_checkpoint(loaded) == bytes);

  TsaNet<float> b(ModelConfig::preset("toy"));
  load_params(b, loaded);
  Trainer bt(b, cfg, data, Phase::kPretrainQ2R, 9);
  bt.restore(loaded.iteration, load_adam(b, loaded));
  CHECK(encode_checkpoint(make_checkpoint(b, cj, "pretrain_q2r", bt.iteration(), &bt.adam())) == bytes);
  CHECK(bt.step().loss_final == ref_losses[2]);
  CHECK(bt.step().loss_final == ref_losses[3]);
  std::filesystem::remove_all(dir);
}

TEST_CASE("checkpoint errors") {
  TsaNet<float> net(ModelConfig::preset("toy"));
  auto ck = make_checkpoint(net, nlohmann::json::object(), "joint", 0);
  const std::string missing = ck.arrays[3].name;
  ck.arrays.erase(ck.arrays.begin() + 3);
  try {
    load_params(net, ck);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find(missing) != std::string::npos);
  }
  CHECK_THROWS_AS(decode_checkpoint("not a checkpoint"), FormatError);
  auto bytes = encode_checkpoint(make_checkpoint(net, nlohmann::json::object(), "joint", 0));
  CHECK_THROWS_AS(decode_checkpoint(bytes + "x"), FormatError);
  CHECK_THROWS_AS(decode_checkpoint(bytes.substr(0, bytes.size() - 4)), FormatError);
  // Loading only one stage ignores the other's absence.
  auto q2q_only = make_checkpoint(net, nlohmann::json::object(), "pretrain_q2q", 0);
  std::erase_if(q2q_only.arrays, [](const CheckpointArray& a) { return a.name.starts_with("q2r."); });
  CHECK_NOTHROW(load_params(net, q2q_only, "q2q."));
  CHECK_THROWS_AS(load_params(net, q2q_only, "q2r."), FormatError);
}
