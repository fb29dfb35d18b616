// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "test_util.hpp"
#include "tsanet/model.hpp"
#include "tsanet/verify.hpp"

using namespace tsanet;
using namespace tsanet::testing;

namespace {

NetInputs<float> toy_inputs(std::int64_t h, std::int64_t w, std::uint64_t seed) {
  const auto s = synthesize_sample(procedural_image(h, w, seed), CfaSpec::quad_bayer_default(), 0.0, seed);
  return make_inputs<float>({s});
}

bool all_finite(const Tensor<float>& t) {
  for (float v : t.data())
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace

TEST_CASE("toy config builds and runs a 32x32 forward") {
  TsaNet<float> net(ModelConfig::preset("toy"));
  randomize_params(net.params(), 3, 0.1);
  const auto in = toy_inputs(32, 32, 1);
  const auto q = net.forward_q2q(in.inpainted, in.pq, in.pe);
  CHECK(q.shape() == Shape{1, 32, 32, 1});
  const auto rgb = net.forward_q2r(q, in.pq);
  CHECK(rgb.shape() == Shape{1, 32, 32, 3});
  CHECK(all_finite(q));
  CHECK(all_finite(rgb));
}

TEST_CASE("untrained stages are residual: zero head passes the input through") {
  TsaNet<float> net(ModelConfig::preset("toy"));
  const auto in = toy_inputs(32, 32, 2);
  const auto q = net.forward_q2q(in.inpainted, in.pq, in.pe);
  for (std::int64_t i = 0; i < q.numel(); ++i) REQUIRE(q.data()[i] == in.inpainted.data()[i]);
  const auto zero = Tensor<float>::zeros({1, 32, 32, 1});
  const auto rgb = net.forward_q2r(zero, in.pq);
  for (float v : rgb.data()) REQUIRE(v == 0.0f);
  // A flat raw interpolates to the same flat gray in every channel.
  const auto flat = net.forward_q2r(Tensor<float>::full({1, 32, 32, 1}, 0.3f), in.pq);
  for (float v : flat.data()) REQUIRE(v == doctest::Approx(0.3f).epsilon(1e-6));
}

TEST_CASE("untrained q2r is the tent-weighted same-color interpolation") {
  TsaNet<double> net(ModelConfig::preset("toy"));
  const auto in = toy_inputs(16, 16, 4);
  const auto raw = random_tensor<double>({1, 16, 16, 1}, 8, 0.0, 1.0);
  const auto pq = Tensor<double>::from_data(in.pq.shape(), {in.pq.data().begin(), in.pq.data().end()});
  const auto rgb = net.forward_q2r(raw, pq);
  // Two zero-padded 3x3 box passes, evaluated literally.
  auto box = [](const std::vector<double>& v) {
    std::vector<double> out(v.size(), 0.0);
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int yy = y + dy, xx = x + dx;
            if (yy >= 0 && xx >= 0 && yy < 16 && xx < 16) out[y * 16 + x] += v[yy * 16 + xx];
          }
    return out;
  };
  for (int c = 0; c < 3; ++c) {
    std::vector<double> m(256), mx(256);
    for (int i = 0; i < 256; ++i) {
      m[i] = pq.data()[i * 3 + c];
      mx[i] = m[i] * raw.data()[i];
    }
    const auto num = box(box(mx)), den = box(box(m));
    for (int y = 0; y < 16; ++y)
      for (int x = 0; x < 16; ++x) {
        const int i = y * 16 + x;
        REQUIRE(rgb.data()[i * 3 + c] == doctest::Approx(num[i] / den[i]).epsilon(1e-12));
      }
  }
}

TEST_CASE("invalid configs are rejected") {
  ModelConfig c = ModelConfig::preset("toy");
  c.q2r.widths = {8, 15, 32};
  CHECK_THROWS_AS(TsaNet<float>{c}, ConfigError);
  c = ModelConfig::preset("toy");
  c.q2q.widths = {8, 16};
  CHECK_THROWS_AS(TsaNet<float>{c}, ConfigError);
  CHECK_THROWS_AS(ModelConfig::preset("xl"), ConfigError);
}

TEST_CASE("stage parameter ordering across size variants") {
  std::int64_t prev = 0;
  for (const char* v : {"s", "m", "l"}) {
    CAPTURE(v);
    TsaNet<float> net(ModelConfig::preset(v));
    const auto r = count_params(net);
    CHECK(r.params_q2r > r.params_q2q);
    CHECK(static_cast<double>(r.params_q2r) / static_cast<double>(r.params_q2q) > 1.5);
    CHECK(r.params_total == r.params_q2q + r.params_q2r);
    CHECK(r.params_total > prev);
    prev = r.params_total;
  }
}

TEST_CASE("linear layer parameter count is in*out + out") {
  ParamStore<float> s;
  Linear<float> l(s, "fc", 7, 5);
  CHECK(s.count() == 7 * 5 + 5);
}

TEST_CASE("all 16 toggle combinations build with identical output shapes") {
  const auto in = toy_inputs(16, 16, 3);
  std::int64_t full_params = 0;
  for (int mask = 0; mask < 16; ++mask) {
    CAPTURE(mask);
    ModelConfig c = ModelConfig::preset("toy");
    c.toggles = {(mask & 1) != 0, (mask & 2) != 0, (mask & 4) != 0, (mask & 8) != 0};
    TsaNet<float> net(c);
    const auto q = net.forward_q2q(in.inpainted, in.pq, in.pe);
    const auto y = net.forward_q2r(q, in.pq);
    CHECK(q.shape() == Shape{1, 16, 16, 1});
    CHECK(y.shape() == Shape{1, 16, 16, 3});
    if (mask == 15) full_params = count_params(net).params_total;
  }
  ModelConfig c = ModelConfig::preset("toy");
  c.toggles.qcsa = false;
  TsaNet<float> no_qcsa(c);
  CHECK(count_params(no_qcsa).params_total != full_params);
}

TEST_CASE("reflect padding is transparent for conforming extents") {
  TsaNet<float> net(ModelConfig::preset("toy"));
  randomize_params(net.params(), 5, 0.1);
  const auto in = toy_inputs(32, 32, 4);
  const auto direct = net.forward(in);
  const auto m = net.config().pad_multiple();
  auto pc = [&](const Tensor<float>& t) {
    return ops::crop(ops::pad(t, 0, m, 0, m, ops::PadMode::kReflect), 0, 0, 32, 32);
  };
  const auto again = net.forward({pc(in.inpainted), pc(in.pq), pc(in.pe)});
  for (std::int64_t i = 0; i < direct.numel(); ++i) REQUIRE(direct.data()[i] == again.data()[i]);
}

TEST_CASE("non-conforming extents are padded and cropped back") {
  TsaNet<float> net(ModelConfig::preset("toy"));
  const auto in = toy_inputs(20, 28, 6);
  CHECK(net.forward(in).shape() == Shape{1, 20, 28, 3});
}

TEST_CASE("end-to-end forward is the composition of the stage forwards") {
  TsaNet<float> net(ModelConfig::preset("toy"));
  randomize_params(net.params(), 7, 0.1);
  const auto in = toy_inputs(16, 16, 7);
  const auto joint = net.forward(in);
  const auto seq = net.forward_q2r(net.forward_q2q(in.inpainted, in.pq, in.pe), in.pq);
  for (std::int64_t i = 0; i < joint.numel(); ++i) REQUIRE(joint.data()[i] == seq.data()[i]);
}

TEST_CASE("total multiply-adds grow linearly in pixel count for every variant") {
  for (const char* v : {"toy", "s", "m", "l"}) {
    CAPTURE(v);
    TsaNet<float> net(ModelConfig::preset(v));
    const auto a = count_flops(net, 32, 32), b = count_flops(net, 64, 64);
    const double ratio = static_cast<double>(b.flops_total) / static_cast<double>(a.flops_total);
    CHECK(ratio == doctest::Approx(4.0).epsilon(0.05));
    CHECK(a.flops_total == a.flops_q2q + a.flops_q2r);
    CHECK(a.macs_by_path.count("q2r.enc0.qcsa.wmca") == 1);
  }
}

TEST_CASE("parameter initialization is a function of seed and name") {
  ModelConfig c = ModelConfig::preset("toy");
  TsaNet<float> a(c), b(c);
  c.toggles.spa = false;
  TsaNet<float> other(c);
  for (const auto& e : a.params().entries()) {
    const auto bv = b.params().at(e.name);
    for (std::int64_t i = 0; i < e.value.numel(); ++i) REQUIRE(e.value.data()[i] == bv.data()[i]);
    if (other.params().contains(e.name)) {
      const auto ov = other.params().at(e.name);
      if (ov.shape() != e.value.shape()) continue;
      for (std::int64_t i = 0; i < e.value.numel(); ++i) REQUIRE(e.value.data()[i] == ov.data()[i]);
    }
  }
}

TEST_CASE("copy_params transfers every tensor between precisions") {
  TsaNet<float> f(ModelConfig::preset("toy"));
  randomize_params(f.params(), 9, 0.2);
  TsaNet<double> d(ModelConfig::preset("toy"));
  copy_params(f, d);
  for (const auto& e : f.params().entries()) {
    const auto dv = d.params().at(e.name);
    for (std::int64_t i = 0; i < e.value.numel(); ++i) REQUIRE(static_cast<float>(dv.data()[i]) == e.value.data()[i]);
  }
}

TEST_CASE("full toy network passes gradcheck in 64-bit") {
  // One seed here; the acceptance binary runs three.
  CHECK(run_gradcheck_case("tsanet", 0).pass);
}
