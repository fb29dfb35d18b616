// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

// End-to-end acceptance run: one PASS/FAIL line per criterion.
// Usage: acceptance <path to tsanet CLI> [criterion numbers...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "test_util.hpp"
#include "tsanet/checkpoint.hpp"
#include "tsanet/cost.hpp"
#include "tsanet/config.hpp"
#include "tsanet/metrics.hpp"
#include "tsanet/pipeline.hpp"
#include "tsanet/pnm.hpp"
#include "tsanet/verify.hpp"

namespace fs = std::filesystem;
using namespace tsanet;
using namespace tsanet::testing;
using D = double;
using TD = Tensor<D>;

namespace {

std::string g_cli;
fs::path g_tmp;

struct Outcome {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int run_cli(const std::string& args) {
  const std::string cmd = "\"" + g_cli + "\" " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

// Same color/event layout as the default tile, spelled out independently.
int oracle_channel(std::int64_t y, std::int64_t x) {
  static const char* rows[4] = {"RRGG", "RRGG", "GGBB", "GGBB"};
  const char c = rows[y % 4][x % 4];
  return c == 'R' ? 0 : c == 'G' ? 1 : 2;
}
bool oracle_event(std::int64_t y, std::int64_t x) {
  return (y % 4 == 0 && x % 4 == 2) || (y % 4 == 1 && x % 4 == 3);
}

RgbImage random_rgb(std::int64_t h, std::int64_t w, std::uint64_t seed) {
  Rng rng(seed);
  RgbImage img(h, w);
  for (auto& v : img.data) v = static_cast<float>(uniform01(rng));
  return img;
}

// ---- 1 ----
Outcome gradients() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0;
  std::int64_t checks = 0;
  for (const auto& name : gradcheck_case_names()) {
    for (std::uint64_t seed : {0, 1, 2}) {
      const auto r = run_gradcheck_case(name, seed);
      worst = std::max(worst, r.max_rel_err);
      checks += r.checked;
      o.require(r.pass, name + " seed " + std::to_string(seed) + " rel " + fmt("%.2e", r.max_rel_err));
    }
  }
  const double secs = seconds_since(t0);
  o.require(secs < 300.0, "runtime " + fmt("%.0f", secs) + " s exceeds 300 s");
  o.note(std::to_string(gradcheck_case_names().size()) + " cases x 3 seeds, " + std::to_string(checks) +
         " coords, max rel " + fmt("%.2e", worst) + ", " + fmt("%.0f", secs) + " s");
  return o;
}

// ---- 2 ----
Outcome scan_oracle() {
  Outcome o;
  auto scan1 = [](std::vector<double> x, double delta, double a) {
    const auto n = static_cast<std::int64_t>(x.size());
    return ops::selective_scan(TD::from_data({1, 1, n, 1}, x), TD::full({1, 1, n, 1}, delta), TD::full({1, 1}, a),
                               TD::full({1, 1, n, 1}, 1.0), TD::full({1, 1, n, 1}, 1.0), TD::full({1}, 0.0),
                               ops::ScanOrder::kRowForward);
  };
  const auto cum = scan1({1, 2, 3}, 1.0, 0.0);
  const std::vector<double> cum_ref = {1, 3, 6};
  for (int t = 0; t < 3; ++t) o.require(std::abs(cum.data()[t] - cum_ref[t]) < 1e-12, "cumulative-sum case");
  const auto decay = scan1({1, 0, 0}, std::log(2.0), -1.0);
  const std::vector<double> decay_ref = {std::log(2.0), std::log(2.0) / 2, std::log(2.0) / 4};
  for (int t = 0; t < 3; ++t) o.require(std::abs(decay.data()[t] - decay_ref[t]) < 1e-12, "decay case");
  o.require(std::abs(decay.data()[2] - 0.1733) < 1e-4, "decay case 0.1733");

  Rng rng(2024);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto len = 1 + static_cast<std::int64_t>(uniform01(rng) * 32);
    const auto n = 1 + static_cast<std::int64_t>(uniform01(rng) * 8);
    const std::int64_t ch = 3;
    const std::uint64_t s = 1000 + trial * 11;
    const auto x = random_tensor<D>({1, 1, len, ch}, s + 1);
    const auto delta = random_tensor<D>({1, 1, len, ch}, s + 2, 0.01, 1.5);
    const auto a = random_tensor<D>({ch, n}, s + 3, -3.0, -0.01);
    const auto b = random_tensor<D>({1, 1, len, n}, s + 4);
    const auto c = random_tensor<D>({1, 1, len, n}, s + 5);
    const auto d = random_tensor<D>({ch}, s + 6);
    const auto y = ops::selective_scan(x, delta, a, b, c, d, ops::ScanOrder::kRowForward);
    for (std::int64_t k = 0; k < ch; ++k) {
      std::vector<double> xs(len), ds(len), as(n);
      std::vector<std::vector<double>> bs(len, std::vector<double>(n)), cs = bs;
      for (std::int64_t t = 0; t < len; ++t) {
        xs[t] = x.data()[t * ch + k];
        ds[t] = delta.data()[t * ch + k];
        for (std::int64_t j = 0; j < n; ++j) {
          bs[t][j] = b.data()[t * n + j];
          cs[t][j] = c.data()[t * n + j];
        }
      }
      for (std::int64_t j = 0; j < n; ++j) as[j] = a.data()[k * n + j];
      const auto ref = naive_scan(xs, ds, as, bs, cs, d.data()[k]);
      for (std::int64_t t = 0; t < len; ++t) worst = std::max(worst, std::abs(y.data()[t * ch + k] - ref[t]));
    }
  }
  o.require(worst < 1e-6, "random cases max err " + fmt("%.2e", worst));
  o.note("closed forms exact; 100 random cases, max abs err " + fmt("%.2e", worst));
  return o;
}

// ---- 3 ----
// Single-head global self-attention over all pixels, the quadratic reference.
std::int64_t global_attention_macs(std::int64_t hw, std::int64_t c) {
  ParamStore<float> store(5);
  const Linear<float> q(store, "q", c, c), k(store, "k", c, c), v(store, "v", c, c);
  const auto x = random_tensor<float>({1, hw * hw, c}, 9);
  CostCounter counter;
  NoGradGuard guard;
  const auto qs = q(x), ks = k(x), vs = v(x);
  const auto att = ops::softmax(ops::scale(ops::bmm(qs, ks, true), 1.0f / std::sqrt(static_cast<float>(c))));
  (void)ops::bmm(att, vs);
  return counter.total_macs();
}

Outcome linear_complexity() {
  Outcome o;
  ParamStore<float> store(0);
  Ss2d<float> ss(store, "s", 8, 8);
  auto ss_macs = [&](std::int64_t hw) {
    CostCounter counter;
    NoGradGuard guard;
    (void)ss(random_tensor<float>({1, hw, hw, 8}, 1));
    return static_cast<double>(counter.total_macs());
  };
  const double r_ss = ss_macs(64) / ss_macs(32);
  TsaNet<float> net(ModelConfig::preset("toy"));
  const double r_net = static_cast<double>(count_flops(net, 64, 64).flops_total) /
                       static_cast<double>(count_flops(net, 32, 32).flops_total);
  const double r_att = static_cast<double>(global_attention_macs(64, 8)) / static_cast<double>(global_attention_macs(32, 8));
  o.require(std::abs(r_ss / 4.0 - 1.0) <= 0.05, "ss2d ratio " + fmt("%.3f", r_ss));
  o.require(std::abs(r_net / 4.0 - 1.0) <= 0.05, "model ratio " + fmt("%.3f", r_net));
  o.require(std::abs(r_att / 16.0 - 1.0) <= 0.05, "global attention ratio " + fmt("%.3f", r_att));
  o.note("32->64: ss2d x" + fmt("%.3f", r_ss) + ", toy model x" + fmt("%.3f", r_net) + ", global attention x" +
         fmt("%.3f", r_att));
  return o;
}

// ---- 4 ----
Outcome cost_structure() {
  Outcome o;
  std::vector<std::int64_t> totals;
  std::string d;
  for (const char* v : {"s", "m", "l"}) {
    TsaNet<float> net(ModelConfig::preset(v));
    const auto c = count_params(net);
    const double ratio = static_cast<double>(c.params_q2r) / static_cast<double>(c.params_q2q);
    o.require(c.params_q2q < c.params_q2r, std::string(v) + ": q2q >= q2r");
    o.require(ratio > 1.5, std::string(v) + ": ratio " + fmt("%.2f", ratio));
    totals.push_back(c.params_total);
    d += std::string(d.empty() ? "" : ", ") + v + " " + fmt("%.3fM", c.params_q2q / 1e6) + "+" +
         fmt("%.3fM", c.params_q2r / 1e6) + " (x" + fmt("%.2f", ratio) + ")";
  }
  o.require(totals[0] < totals[1] && totals[1] < totals[2], "totals not ordered s < m < l");
  o.note(d);
  return o;
}

// ---- 5 ----
Outcome overfit() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  TrainData data;
  data.images = {procedural_image(64, 64, 77)};
  TrainConfig tc;
  tc.patch_size = 64;
  tc.batch_size = 1;
  tc.lr_start = 2e-3;
  tc.lr_end = 2e-6;
  const std::int64_t iters = 2000;
  TsaNet<float> net(ModelConfig::preset("toy"));
  Trainer tr(net, tc, data, Phase::kJoint, 0);
  tr.set_total(iters);
  run_steps(tr, -1);
  const auto sample = synthesize_sample(data.images[0], data.cfa, 0.0, 0);
  const auto row = score_image(network_demosaicer(net)(sample), sample.rgb, EvalConfig{});
  const double secs = seconds_since(t0);
  o.require(row.psnr >= 40.0, "PSNR " + fmt("%.2f", row.psnr) + " dB < 40");
  o.note(std::to_string(iters) + " joint iterations from scratch: " + fmt("%.2f", row.psnr) + " dB in " +
         fmt("%.0f", secs) + " s");
  return o;
}

// ---- 6 ----
Outcome two_step() {
  Outcome o;
  auto cfg = RunConfig::defaults();
  AblationBudget budget;
  // Q2R needs a few hundred steps before it improves on its interpolation base.
  budget.pretrain_steps = 600;
  budget.joint_steps = 300;
  budget.lr_start = 2e-3;
  budget.holdout = 8;
  double best_pre = 1e9, best_scratch = 1e9, best_final = 1e9, best_dual = 1e9;
  std::string per_seed;
  for (std::uint64_t seed : {0, 1, 2}) {
    const auto rows = ablate_joint(cfg, {JointStrategy::kFinalOnly, JointStrategy::kDual, JointStrategy::kScratch},
                                   budget, seed);
    const double fin = rows[0].quality.final_loss, dual = rows[1].quality.final_loss, scr = rows[2].quality.final_loss;
    best_pre = std::min(best_pre, fin);
    best_final = std::min(best_final, fin);
    best_dual = std::min(best_dual, dual);
    best_scratch = std::min(best_scratch, scr);
    per_seed += " s" + std::to_string(seed) + "[" + fmt("%.4f", fin) + "/" + fmt("%.4f", dual) + "/" + fmt("%.4f", scr) + "]";
  }
  o.require(best_pre <= best_scratch, "(a) pretrain+joint " + fmt("%.5f", best_pre) + " > scratch " + fmt("%.5f", best_scratch));
  o.require(best_final <= best_dual, "(b) final_only " + fmt("%.5f", best_final) + " > dual " + fmt("%.5f", best_dual));
  o.note("best held-out loss: two-step " + fmt("%.5f", best_pre) + " vs scratch " + fmt("%.5f", best_scratch) +
         ", final_only " + fmt("%.5f", best_final) + " vs dual " + fmt("%.5f", best_dual) +
         "; per seed final/dual/scratch" + per_seed);
  return o;
}

// ---- 7 ----
Outcome simulator() {
  Outcome o;
  const auto spec = CfaSpec::quad_bayer_default();
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto img = random_rgb(12 + 4 * seed, 20, seed);
    const auto raw = mosaic_quad_bayer(img, spec);
    const auto masked = apply_event_mask(raw, spec);
    const auto maps = make_position_maps(spec, img.height, img.width);
    bool ok_m = true, ok_e = true, ok_p = true;
    for (std::int64_t y = 0; y < img.height; ++y)
      for (std::int64_t x = 0; x < img.width; ++x) {
        const auto ch = oracle_channel(y, x);
        const bool ev = oracle_event(y, x);
        ok_m = ok_m && raw.at(y, x) == img.at(y, x, ch);
        ok_e = ok_e && masked.at(y, x) == (ev ? 0.0f : raw.at(y, x)) && masked.is_event(y, x) == ev;
        const auto p = y * img.width + x;
        for (int c = 0; c < 3; ++c) ok_p = ok_p && maps.pq[p * 3 + c] == (c == ch ? 1.0f : 0.0f);
        ok_p = ok_p && maps.pe[p] == (ev ? 1.0f : 0.0f);
      }
    o.require(ok_m, "mosaic differs from oracle");
    o.require(ok_e, "event mask differs from oracle");
    o.require(ok_p, "position maps differ from oracle");
  }

  // Worked example: one event in a green quad with neighbours 0.2, 0.4, 0.6.
  auto one = spec;
  one.event_mask = {};
  one.event_mask[1][3] = 1;
  RawImage raw(4, 4, 0.9f);
  raw.at(0, 2) = 0.2f;
  raw.at(0, 3) = 0.4f;
  raw.at(1, 2) = 0.6f;
  const auto filled = coarse_inpaint(apply_event_mask(raw, one), one);
  o.require(std::abs(filled.at(1, 3) - 0.4f) < 1e-6f, "coarse inpaint gave " + fmt("%.6f", filled.at(1, 3)));

  // CLI output with read noise on: event positions must be exactly 0.
  const auto dir = g_tmp / "c7";
  fs::create_directories(dir / "in");
  save_image(random_rgb(36, 44, 7), dir / "in" / "a.ppm", BitDepth::k16);
  write_file(dir / "cfg.json", R"({"version":1,"cfa":{"noise_sigma":0.05}})");
  const int rc = run_cli("simulate --config \"" + (dir / "cfg.json").string() + "\" --in \"" + (dir / "in").string() +
                         "\" --out \"" + (dir / "out").string() + "\"");
  o.require(rc == 0, "simulate exit " + std::to_string(rc));
  if (rc == 0) {
    const auto out = load_gray(dir / "out" / "a_raw.pgm");
    const auto pe = load_gray(dir / "out" / "a_pe.pgm");
    std::int64_t events = 0, nonzero_events = 0, nonzero_other = 0;
    for (std::int64_t y = 0; y < out.height; ++y)
      for (std::int64_t x = 0; x < out.width; ++x) {
        if (oracle_event(y, x)) {
          ++events;
          nonzero_events += out.at(y, x) != 0.0f;
          o.require(pe.at(y, x) == 1.0f, "pe map");
        } else {
          nonzero_other += out.at(y, x) != 0.0f;
        }
      }
    o.require(nonzero_events == 0, std::to_string(nonzero_events) + " event pixels nonzero");
    o.require(nonzero_other > 0, "raw output is blank");
    o.note("oracles bit-exact on 3 images; inpaint 0.4; " + std::to_string(events) + " event pixels in CLI raw all 0");
  }
  return o;
}

// ---- 8 ----
Outcome metrics() {
  Outcome o;
  std::vector<float> zero(64, 0.0f), half(64, 0.5f), tenth(64, 0.1f);
  const double p6 = psnr({zero.data(), 8, 8, 1}, {half.data(), 8, 8, 1});
  const double p20 = psnr({zero.data(), 8, 8, 1}, {tenth.data(), 8, 8, 1});
  o.require(std::abs(p6 - 6.0206) < 1e-3, "psnr " + fmt("%.5f", p6));
  o.require(std::abs(p20 - 20.0) < 1e-3, "psnr " + fmt("%.5f", p20));
  const auto a = random_rgb(24, 24, 1), b = random_rgb(24, 24, 2);
  const double same = ssim(view(a), view(a));
  o.require(same == 1.0, "ssim(x, x) = " + fmt("%.17g", same));

  // Brute-force window sums, single channel.
  std::vector<float> x(16 * 16), y(16 * 16);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = a.data[i];
    y[i] = 0.6f * a.data[i] + 0.4f * b.data[i];
  }
  const auto win = ssim_window();
  double total = 0;
  int count = 0;
  for (int y0 = 0; y0 + 11 <= 16; ++y0)
    for (int x0 = 0; x0 + 11 <= 16; ++x0) {
      double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
      for (int i = 0; i < 11; ++i)
        for (int j = 0; j < 11; ++j) {
          const double g = win[i * 11 + j], u = x[(y0 + i) * 16 + x0 + j], v = y[(y0 + i) * 16 + x0 + j];
          mx += g * u;
          my += g * v;
          sxx += g * u * u;
          syy += g * v * v;
          sxy += g * u * v;
        }
      const double c1 = 1e-4, c2 = 9e-4;
      total += (2 * mx * my + c1) * (2 * (sxy - mx * my) + c2) /
               ((mx * mx + my * my + c1) * (sxx - mx * mx + syy - my * my + c2));
      ++count;
    }
  const double oracle = total / count, fast = ssim({x.data(), 16, 16, 1}, {y.data(), 16, 16, 1});
  o.require(std::abs(oracle - fast) < 1e-6, "ssim vs oracle " + fmt("%.3e", std::abs(oracle - fast)));
  o.note("psnr " + fmt("%.4f", p6) + " / " + fmt("%.4f", p20) + " dB; ssim(x,x)=1; oracle diff " +
         fmt("%.1e", std::abs(oracle - fast)));
  return o;
}

// ---- 9 ----
std::string strip_wall_ms(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

std::map<std::string, std::string> snapshot_tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files[fs::relative(e.path(), root).generic_string()] = read_file(e.path());
  return files;
}

Outcome determinism() {
  Outcome o;
  const auto dir = g_tmp / "c9";
  fs::create_directories(dir / "in");
  for (int i = 0; i < 2; ++i) save_image(procedural_image(48, 40, 30 + i), dir / "in" / ("p" + std::to_string(i) + ".ppm"), BitDepth::k16);
  const auto work = dir / "work";
  const std::string cfg = (dir / "cfg.json").string();
  write_file(cfg, nlohmann::json{{"version", 1},
                                 {"seed", 5},
                                 {"cfa", {{"noise_sigma", 0.01}}},
                                 {"train", {{"patch_size", 32}, {"batch_size", 1}, {"iterations", 8}}},
                                 {"io",
                                  {{"procedural_size", 64},
                                   {"out_dir", (work / "out").string()},
                                   {"checkpoint_dir", (work / "ckpt").string()}}}}
                      .dump());
  auto pipeline = [&]() {
    fs::remove_all(work);
    const std::string c = "--config \"" + cfg + "\"";
    int rc = run_cli("simulate " + c + " --in \"" + (dir / "in").string() + "\" --out \"" + (work / "sim").string() + "\"");
    for (const char* ph : {"pretrain_q2q", "pretrain_q2r", "joint"}) rc = rc ? rc : run_cli("train " + c + " --phase " + ph);
    rc = rc ? rc : run_cli("eval " + c + " --ckpt \"" + (work / "ckpt" / "joint.ckpt").string() + "\" --manifest \"" +
                                (work / "sim" / "manifest.txt").string() + "\"");
    auto files = snapshot_tree(work);
    for (auto& [name, bytes] : files)
      if (name.starts_with("out/train_")) bytes = strip_wall_ms(bytes);
    return std::make_pair(rc, files);
  };
  const auto [rc1, run1] = pipeline();
  const auto [rc2, run2] = pipeline();
  o.require(rc1 == 0 && rc2 == 0, "pipeline exit codes " + std::to_string(rc1) + "/" + std::to_string(rc2));
  o.require(run1.size() >= 14, "expected simulate + 3 checkpoints + logs + eval outputs, got " + std::to_string(run1.size()) + " files");
  o.require(run1 == run2, "repeat run differs");
  for (const auto& [name, bytes] : run1) {
    const auto it = run2.find(name);
    if (it == run2.end() || it->second != bytes) o.require(false, name + " differs");
  }

  // Checkpoint save -> load -> save.
  const auto ck = work / "ckpt" / "joint.ckpt";
  if (fs::exists(ck)) {
    const auto bytes = read_file(ck);
    save_checkpoint(load_checkpoint(ck), dir / "again.ckpt");
    o.require(read_file(dir / "again.ckpt") == bytes, "checkpoint resave differs");
  } else {
    o.require(false, "joint checkpoint missing");
  }

  // 16-bit netpbm roundtrip.
  const auto img = random_rgb(9, 7, 3);
  const auto back = decode_ppm(encode_ppm(img, BitDepth::k16));
  double worst = 0;
  for (std::size_t i = 0; i < img.data.size(); ++i) worst = std::max(worst, std::abs(double(back.data[i]) - img.data[i]));
  RawImage g(5, 11);
  Rng rng(4);
  for (auto& v : g.data) v = static_cast<float>(uniform01(rng));
  const auto gb = decode_pgm(encode_pgm(g, BitDepth::k16));
  for (std::size_t i = 0; i < g.data.size(); ++i) worst = std::max(worst, std::abs(double(gb.data[i]) - g.data[i]));
  o.require(worst <= 1.0 / 65535.0, "16-bit roundtrip error " + fmt("%.3e", worst));
  o.note(std::to_string(run1.size()) + " files byte-identical across runs (log wall_ms excluded); checkpoint resave identical; 16-bit err " +
         fmt("%.2e", worst));
  return o;
}

// ---- 10 ----
std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    rows.push_back(f);
  }
  return rows;
}

bool numeric_cells(const std::vector<std::string>& row, std::size_t from) {
  for (std::size_t i = from; i < row.size(); ++i) {
    char* end = nullptr;
    const double v = std::strtod(row[i].c_str(), &end);
    if (end == row[i].c_str() || *end != '\0' || !std::isfinite(v)) return false;
  }
  return true;
}

Outcome ablations() {
  Outcome o;
  auto cfg = RunConfig::defaults();
  cfg.io.procedural_size = 64;
  AblationBudget b;
  b.pretrain_steps = b.joint_steps = 4;
  const auto t4 = parse_csv(format_toggle_table(ablate_toggles(cfg, table_iv_cases(), b)));
  o.require(t4.size() == 7, "toggle table has " + std::to_string(t4.size()) + " lines");
  std::set<std::string> params;
  for (std::size_t i = 1; i < t4.size(); ++i) {
    o.require(t4[i].size() == 9 && numeric_cells(t4[i], 5), "toggle row " + std::to_string(i) + " malformed");
    if (t4[i].size() > 5) params.insert(t4[i][5]);
  }
  o.require(params.size() >= 4, "module toggles should change the parameter count");

  const auto t6 = parse_csv(format_joint_table(ablate_joint(
      cfg, {JointStrategy::kNone, JointStrategy::kFreezeQ2Q, JointStrategy::kDual, JointStrategy::kFinalOnly}, b, 0)));
  o.require(t6.size() == 5, "joint table has " + std::to_string(t6.size()) + " lines");
  for (std::size_t i = 1; i < t6.size(); ++i)
    o.require(t6[i].size() == 7 && numeric_cells(t6[i], 2), "joint row " + std::to_string(i) + " malformed");

  // The CLI path: a requested case runs, an unknown module is a config error.
  const auto dir = g_tmp / "c10";
  fs::create_directories(dir);
  write_file(dir / "cfg.json", R"({"version":1,"train":{"patch_size":32},"io":{"procedural_size":64}})");
  const std::string c = "--config \"" + (dir / "cfg.json").string() + "\"";
  const int rc = run_cli("ablate " + c + " --toggles qcsa,rvss --toggles all --steps 2 --out \"" + (dir / "iv.csv").string() + "\"");
  o.require(rc == 0, "cli ablate exit " + std::to_string(rc));
  if (rc == 0) o.require(parse_csv(read_file(dir / "iv.csv")).size() == 3, "cli ablate rows");
  o.require(run_cli("ablate " + c + " --toggles qcsa,xyz") == 2, "unknown toggle should exit 2");
  o.note("6 module cases and 4 joint-training cases, reports well formed");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: acceptance <tsanet cli> [criteria...]\n");
    return 2;
  }
  g_cli = fs::absolute(argv[1]).string();
  g_tmp = fs::temp_directory_path() / ("tsanet_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(g_tmp);
  fs::create_directories(g_tmp);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient correctness", gradients},
      {"scan oracle equivalence", scan_oracle},
      {"linear complexity", linear_complexity},
      {"cost structure", cost_structure},
      {"toy overfit", overfit},
      {"two-step benefit direction", two_step},
      {"simulator exactness", simulator},
      {"metric exactness", metrics},
      {"determinism and formats", determinism},
      {"ablation harness", ablations},
  };
  std::set<int> only;
  for (int i = 2; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.note(std::string("exception: ") + e.what());
    }
    failed += !o.pass;
    std::printf("criterion %d %s: %s (%s) [%.1f s]\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  fs::remove_all(g_tmp);
  return failed == 0 ? 0 : 1;
}
