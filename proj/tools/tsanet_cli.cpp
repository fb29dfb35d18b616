// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

// tsanet: simulate, train, eval, infer, gradcheck, bench, ablate.
// Exit codes: 0 ok, 2 config error, 3 data error, 4 verification failure.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tsanet/checkpoint.hpp"
#include "tsanet/config.hpp"
#include "tsanet/metrics.hpp"
#include "tsanet/pipeline.hpp"
#include "tsanet/pnm.hpp"
#include "tsanet/verify.hpp"

namespace fs = std::filesystem;
using namespace tsanet;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitVerify = 4;

struct VerificationFailure : Error {
  using Error::Error;
};

RunConfig load_config(const std::string& path) {
  return path.empty() ? RunConfig::defaults() : RunConfig::load(path);
}

std::unique_ptr<TsaNet<float>> load_net(const RunConfig& config, const std::string& ckpt) {
  auto net = std::make_unique<TsaNet<float>>(config.model);
  load_params(*net, load_checkpoint(ckpt));
  return net;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_file(path, text);
}

BitDepth depth_of(const RunConfig& c) { return c.io.bit_depth == 8 ? BitDepth::k8 : BitDepth::k16; }

std::vector<std::int64_t> parse_sizes(const std::string& list) {
  std::vector<std::int64_t> out;
  std::stringstream ss(list);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      const auto v = std::stoll(tok, &used);
      if (used != tok.size() || v < 4 || v % 4 != 0) throw std::invalid_argument(tok);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError("--sizes: '" + tok + "' is not a positive multiple of 4");
    }
  }
  if (out.empty()) throw ConfigError("--sizes: empty list");
  return out;
}

// ---- commands ----

int cmd_simulate(const RunConfig& config, const std::string& in, const std::string& out) {
  const auto r = simulate_dir(config, in, out);
  for (const auto& p : r.written) std::cout << p << "\n";
  for (const auto& e : r.errors) std::cerr << "error: " << e << "\n";
  return r.errors.empty() ? 0 : kExitData;
}

int cmd_train(const RunConfig& config, const std::string& phase, const std::string& resume,
              std::int64_t max_steps) {
  PhaseOptions opt;
  if (!resume.empty()) opt.resume = resume;
  opt.max_steps = max_steps;
  const auto r = train_command(config, parse_phase(phase), opt);
  std::printf("%s: %lld/%lld iterations, last loss %.6g\ncheckpoint %s\nlog %s\n", phase.c_str(),
              static_cast<long long>(r.iteration), static_cast<long long>(r.total), r.last_loss,
              r.checkpoint.string().c_str(), r.log.string().c_str());
  return 0;
}

int cmd_eval(const RunConfig& config, const std::string& ckpt, std::string manifest,
             const std::string& reference, const std::string& out) {
  if (manifest.empty()) manifest = config.io.manifest;
  if (manifest.empty()) throw ConfigError("eval needs --manifest or io.manifest");
  if (ckpt.empty() == reference.empty()) throw ConfigError("eval needs exactly one of --ckpt and --reference box");
  if (!reference.empty() && reference != "box") throw ConfigError("--reference: only 'box' is available");

  const auto paths = read_manifest(manifest);
  std::unique_ptr<TsaNet<float>> net;
  Demosaicer model;
  if (!ckpt.empty()) {
    net = load_net(config, ckpt);
    model = network_demosaicer(*net);
  } else {
    model = box_demosaicer(config.model.cfa);
  }
  const auto report = eval_dataset(model, paths, config);
  const fs::path stem = out.empty() ? fs::path(config.io.out_dir) / "eval" : fs::path(out);
  write_text(stem.string() + ".csv", report.to_csv());
  write_text(stem.string() + ".json", report.summary().dump(2) + "\n");
  for (const auto& r : report.rows) {
    if (r.error.empty()) std::printf("%-32s %8.3f dB  %.4f\n", r.name.c_str(), r.psnr, r.ssim);
    else std::printf("%-32s error: %s\n", r.name.c_str(), r.error.c_str());
  }
  std::printf("mean (%lld images) %8.3f dB  %.4f\n", static_cast<long long>(report.evaluated), report.mean_psnr,
              report.mean_ssim);
  return report.failed == 0 ? 0 : kExitData;
}

int cmd_infer(const RunConfig& config, const std::string& ckpt, const std::string& raw, const std::string& pq,
              const std::string& pe, const std::string& out) {
  const auto net = load_net(config, ckpt);
  const auto img = infer_rgb(*net, load_gray(raw), load_rgb(pq), load_gray(pe), config.model.cfa);
  if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
  save_image(img, out, depth_of(config));
  std::printf("%s %lldx%lldx3\n", out.c_str(), static_cast<long long>(img.height), static_cast<long long>(img.width));
  return 0;
}

int cmd_gradcheck(const RunConfig& config, const std::vector<std::string>& cases, int seeds) {
  const auto& names = cases.empty() ? gradcheck_case_names() : cases;
  bool ok = true;
  std::printf("%-12s %4s %8s %12s %s\n", "case", "seed", "checked", "max_rel_err", "result");
  for (const auto& name : names) {
    for (int s = 0; s < seeds; ++s) {
      const auto seed = config.seed + static_cast<std::uint64_t>(s);
      const auto r = run_gradcheck_case(name, seed);
      ok = ok && r.pass;
      std::printf("%-12s %4llu %8lld %12.3e %s\n", name.c_str(), static_cast<unsigned long long>(seed),
                  static_cast<long long>(r.checked), r.max_rel_err, r.pass ? "ok" : ("FAIL at " + r.worst).c_str());
      std::fflush(stdout);
    }
  }
  if (!ok) throw VerificationFailure("gradient check failed");
  return 0;
}

int cmd_bench(const RunConfig& config, const std::string& sizes_arg, bool timing) {
  const auto sizes = parse_sizes(sizes_arg);
  TsaNet<float> net(config.model);
  const auto params = count_params(net);
  std::printf("# variant %s: params q2q %.4fM q2r %.4fM total %.4fM\n", config.model.variant.c_str(),
              params.params_q2q / 1e6, params.params_q2r / 1e6, params.params_total / 1e6);
  std::printf("size,gflops_q2q,gflops_q2r,gflops_total,ratio%s\n", timing ? ",forward_ms" : "");
  double prev = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const auto s = sizes[i];
    const auto c = count_flops(net, s, s);
    const double total = static_cast<double>(c.flops_total);
    char ratio[32] = "";
    if (i > 0) std::snprintf(ratio, sizeof ratio, "%.4f", total / prev);
    std::printf("%lld,%.6f,%.6f,%.6f,%s", static_cast<long long>(s), c.flops_q2q / 1e9, c.flops_q2r / 1e9, total / 1e9,
                ratio);
    if (timing) {
      const auto sample = synthesize_sample(procedural_image(s, s, config.seed), config.model.cfa, 0.0, config.seed);
      const auto in = make_inputs<float>({sample});
      NoGradGuard guard;
      const auto t0 = std::chrono::steady_clock::now();
      (void)net.forward(in);
      std::printf(",%.1f", std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
    }
    std::printf("\n");
    prev = total;
  }
  return 0;
}

int cmd_ablate(const RunConfig& config, const std::string& table, const std::vector<std::string>& toggles,
               std::int64_t steps, const std::string& out) {
  AblationBudget budget;
  if (steps >= 0) budget.pretrain_steps = budget.joint_steps = steps;
  std::string csv;
  if (table == "vi") {
    if (!toggles.empty()) throw ConfigError("--toggles does not apply to --table vi");
    const auto rows = ablate_joint(config,
                                   {JointStrategy::kNone, JointStrategy::kFreezeQ2Q, JointStrategy::kDual,
                                    JointStrategy::kFinalOnly},
                                   budget, config.seed);
    csv = format_joint_table(rows);
  } else if (table == "iv") {
    std::vector<ToggleCase> cases;
    if (toggles.empty()) {
      cases = table_iv_cases();
    } else {
      int id = 1;
      for (const auto& t : toggles) cases.push_back({id++, parse_toggles(t)});
    }
    csv = format_toggle_table(ablate_toggles(config, cases, budget));
  } else {
    throw ConfigError("--table must be iv or vi");
  }
  std::cout << csv;
  const fs::path path = out.empty() ? fs::path(config.io.out_dir) / ("ablation_" + table + ".csv") : fs::path(out);
  write_text(path, csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TSANet: two-stage Quad Bayer HybridEVS demosaicing"};
  app.require_subcommand(1);
  app.footer("Config keys (JSON file given with --config; omitted keys take these defaults):\n" + config_reference() +
             "\nExit codes: 0 ok, 2 config error, 3 data error, 4 verification failure.\n"
             "HYBRIDEVS_THREADS caps worker threads.");

  std::string config_path;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "run configuration (JSON); built-in defaults when omitted");
  };

  std::string in_dir, out_path, phase, resume, ckpt, manifest, reference, raw, pq, pe, sizes = "32,64,128",
                                                                                          table = "iv";
  std::int64_t max_steps = -1, steps = -1;
  int seeds = 3;
  bool no_time = false;
  std::vector<std::string> cases, toggles;

  auto* sim = app.add_subcommand("simulate", "synthesize raw frames, clean quads and position maps from RGB PPMs");
  add_config(sim);
  sim->add_option("--in", in_dir, "directory of RGB .ppm images")->required();
  sim->add_option("--out", out_path, "output directory")->required();

  auto* train = app.add_subcommand("train", "run one training phase; writes a checkpoint and a CSV log");
  add_config(train);
  train->add_option("--phase", phase, "pretrain_q2q | pretrain_q2r | joint")->required();
  train->add_option("--resume", resume, "checkpoint of the same phase to continue from");
  train->add_option("--max-steps", max_steps, "stop after this many steps (checkpoint still written)");

  auto* eval = app.add_subcommand("eval", "PSNR/SSIM over a manifest; writes <out>.csv and <out>.json");
  add_config(eval);
  eval->add_option("--ckpt", ckpt, "trained checkpoint");
  eval->add_option("--reference", reference, "score a reference method instead of a checkpoint (box)");
  eval->add_option("--manifest", manifest, "image manifest (default io.manifest)");
  eval->add_option("--out", out_path, "output stem (default <io.out_dir>/eval)");

  auto* infer = app.add_subcommand("infer", "demosaic one raw frame to an RGB PPM");
  add_config(infer);
  infer->add_option("--ckpt", ckpt, "trained checkpoint")->required();
  infer->add_option("--raw", raw, "raw frame (PGM)")->required();
  infer->add_option("--pq", pq, "CFA color map (PPM)")->required();
  infer->add_option("--pe", pe, "event mask (PGM)")->required();
  infer->add_option("--out", out_path, "output RGB (PPM)")->required();

  auto* grad = app.add_subcommand("gradcheck", "finite-difference check of every block and the full network");
  add_config(grad);
  grad->add_option("--cases", cases, "subset of: ffm spa wmca qcsa sel_scan_1d ss2d rvss cssb csb tsanet");
  grad->add_option("--seeds", seeds, "seeds per case, starting at the config seed")->check(CLI::PositiveNumber);

  auto* bench = app.add_subcommand("bench", "FLOPs (and forward time) across input sizes");
  add_config(bench);
  bench->add_option("--sizes", sizes, "comma-separated square sizes, multiples of 4");
  bench->add_flag("--no-time", no_time, "omit the wall-clock column (output is then deterministic)");

  auto* ablate = app.add_subcommand("ablate", "toy-scale ablations: module toggles (iv) or joint training (vi)");
  add_config(ablate);
  ablate->add_option("--table", table, "iv (module toggles) or vi (joint-training strategies)");
  ablate->add_option("--toggles", toggles,
                     "enabled-module lists such as qcsa,spa (repeatable; all, none); default: the six standard cases");
  ablate->add_option("--steps", steps, "training steps per phase (default 60)");
  ablate->add_option("--out", out_path, "CSV path (default <io.out_dir>/ablation_<table>.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    const auto config = load_config(config_path);
    if (*sim) return cmd_simulate(config, in_dir, out_path);
    if (*train) return cmd_train(config, phase, resume, max_steps);
    if (*eval) return cmd_eval(config, ckpt, manifest, reference, out_path);
    if (*infer) return cmd_infer(config, ckpt, raw, pq, pe, out_path);
    if (*grad) {
      for (const auto& c : cases) {
        const auto& known = gradcheck_case_names();
        if (std::find(known.begin(), known.end(), c) == known.end()) throw ConfigError("unknown gradcheck case " + c);
      }
      return cmd_gradcheck(config, cases, seeds);
    }
    if (*bench) return cmd_bench(config, sizes, !no_time);
    if (*ablate) return cmd_ablate(config, table, toggles, steps, out_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const VerificationFailure& e) {
    std::cerr << "verification failed: " << e.what() << "\n";
    return kExitVerify;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
