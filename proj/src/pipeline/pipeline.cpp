// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include "tsanet/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tsanet/pnm.hpp"
#include "tsanet/rng.hpp"

namespace tsanet {

namespace fs = std::filesystem;

TrainData load_train_data(const RunConfig& config) {
  TrainData d;
  d.cfa = config.model.cfa;
  d.noise_sigma = config.noise_sigma;
  if (!config.io.manifest.empty()) {
    for (const auto& p : read_manifest(config.io.manifest)) d.images.push_back(load_rgb(p));
    if (d.images.empty()) throw FormatError("manifest " + config.io.manifest + " lists no images");
    return d;
  }
  for (std::int64_t i = 0; i < config.io.procedural_images; ++i) {
    const auto s = derive_seed(config.seed, {0x1000 + static_cast<std::uint64_t>(i)});
    d.images.push_back(procedural_image(config.io.procedural_size, config.io.procedural_size, s));
  }
  return d;
}

// ---- simulate ----

SimulateResult simulate_dir(const RunConfig& config, const fs::path& in_dir, const fs::path& out_dir) {
  if (!fs::is_directory(in_dir)) throw FormatError("input directory " + in_dir.string() + " does not exist");
  std::vector<fs::path> inputs;
  for (const auto& e : fs::directory_iterator(in_dir))
    if (e.is_regular_file() && e.path().extension() == ".ppm") inputs.push_back(e.path());
  std::sort(inputs.begin(), inputs.end());
  fs::create_directories(out_dir);
  const auto depth = config.io.bit_depth == 8 ? BitDepth::k8 : BitDepth::k16;
  SimulateResult r;
  std::string manifest;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto& in = inputs[i];
    try {
      RgbImage img = load_rgb(in);
      img = crop_rgb(img, 0, 0, img.height / 4 * 4, img.width / 4 * 4);
      const auto s = synthesize_sample(img, config.model.cfa, config.noise_sigma,
                                       derive_seed(config.seed, {static_cast<std::uint64_t>(i)}));
      const auto stem = in.stem().string();
      const fs::path raw = out_dir / (stem + "_raw.pgm"), clean = out_dir / (stem + "_clean.pgm");
      const fs::path pq = out_dir / (stem + "_pq.ppm"), pe = out_dir / (stem + "_pe.pgm");
      RgbImage pq_img(s.maps.height, s.maps.width);
      pq_img.data = s.maps.pq;
      RawImage pe_img(s.maps.height, s.maps.width);
      pe_img.data = s.maps.pe;
      save_image(s.degraded, raw, depth);
      save_image(s.clean, clean, depth);
      save_image(pq_img, pq, BitDepth::k8);
      save_image(pe_img, pe, BitDepth::k8);
      for (const auto& p : {raw, clean, pq, pe}) r.written.push_back(p.string());
      // Paths relative to the manifest, which read_manifest resolves against.
      const auto rgb_rel = fs::relative(fs::absolute(in), fs::absolute(out_dir)).generic_string();
      manifest += rgb_rel;
      for (const auto& p : {raw, clean, pq, pe}) manifest += "\t" + p.filename().string();
      manifest += "\n";
    } catch (const Error& e) {
      r.errors.push_back(in.string() + ": " + e.what());
    }
  }
  write_file(out_dir / "manifest.txt", manifest);
  r.written.push_back((out_dir / "manifest.txt").string());
  return r;
}

// ---- training ----

std::vector<Sample> holdout_batch(const TrainData& data, std::int64_t patch, std::int64_t count,
                                  std::uint64_t seed) {
  return draw_batch(data, patch, count, derive_seed(seed, {0x401d}), 0);
}

HoldoutLoss evaluate_holdout(const TsaNet<float>& net, const std::vector<Sample>& samples,
                             double charbonnier_eps) {
  NoGradGuard guard;
  const auto in = make_inputs<float>(samples);
  const auto target = make_targets<float>(samples);
  const auto q = net.forward_q2q(in.inpainted, in.pq, in.pe);
  const auto y = net.forward_q2r(q, in.pq);
  HoldoutLoss h;
  h.final_loss = ops::charbonnier(y, target.rgb, charbonnier_eps).item();
  h.q2q_loss = ops::charbonnier(q, target.clean, charbonnier_eps).item();
  const EvalConfig eval;
  const auto n = static_cast<std::int64_t>(samples.size());
  for (std::int64_t i = 0; i < n; ++i) {
    auto rgb = to_rgb_image(y, i);
    for (auto& v : rgb.data) v = std::clamp(v, 0.0f, 1.0f);
    const auto row = score_image(rgb, samples[i].rgb, eval);
    h.final_psnr += row.psnr / n;
    h.final_ssim += row.ssim / n;
    auto raw = to_raw_image(q, i);
    for (auto& v : raw.data) v = std::clamp(v, 0.0f, 1.0f);
    h.q2q_psnr += psnr(view(raw), view(samples[i].clean)) / n;
    h.q2q_ssim += ssim(view(raw), view(samples[i].clean)) / n;
  }
  return h;
}

void run_steps(Trainer& trainer, std::int64_t steps, const StepCallback& on_step) {
  for (std::int64_t k = 0; (steps < 0 || k < steps) && !trainer.done(); ++k) {
    const auto log = trainer.step();
    if (on_step) on_step(log);
  }
}

PhaseOutcome train_command(const RunConfig& config, Phase phase, const PhaseOptions& options) {
  if (phase != Phase::kJoint && config.train.loss_mode == LossMode::kDual) {
    throw ConfigError("train.loss_mode dual only applies to the joint phase");
  }
  if (phase != Phase::kJoint && config.train_from_scratch) {
    throw ConfigError("train.from_scratch only applies to the joint phase");
  }
  const fs::path ckpt_dir = config.io.checkpoint_dir, out_dir = config.io.out_dir;
  std::optional<Checkpoint> resume;
  if (options.resume) {
    resume = load_checkpoint(*options.resume);
    if (resume->phase != phase_name(phase)) {
      throw ConfigError("checkpoint " + options.resume->string() + " is from phase " + resume->phase +
                        ", not " + phase_name(phase));
    }
  }
  std::optional<Checkpoint> pre_q2q, pre_q2r;
  if (!resume && phase == Phase::kJoint && !config.train_from_scratch) {
    auto need = [&](const char* name) {
      const auto p = ckpt_dir / (std::string(name) + ".ckpt");
      if (!fs::exists(p)) throw FormatError("joint phase needs the pretrained checkpoint " + p.string());
      return load_checkpoint(p);
    };
    pre_q2q = need("pretrain_q2q");
    pre_q2r = need("pretrain_q2r");
  }
  const TrainData data = load_train_data(config);

  TsaNet<float> net(config.model);
  Trainer trainer(net, config.train, data, phase, config.seed);
  if (resume) {
    load_params(net, *resume);
    trainer.restore(resume->iteration, load_adam(net, *resume));
  } else if (pre_q2q) {
    load_params(net, *pre_q2q, "q2q.");
    load_params(net, *pre_q2r, "q2r.");
  }

  fs::create_directories(ckpt_dir);
  fs::create_directories(out_dir);
  PhaseOutcome out;
  out.log = out_dir / ("train_" + phase_name(phase) + ".csv");
  out.checkpoint = ckpt_dir / (phase_name(phase) + ".ckpt");
  std::ofstream log(out.log, resume ? std::ios::app : std::ios::trunc);
  if (!log) throw FormatError("cannot write " + out.log.string());
  if (!resume) log << log_header() << "\n";
  run_steps(trainer, options.max_steps, [&](const StepLog& s) {
    out.last_loss = s.loss_final;
    if (s.iter % config.train.log_every == 0 || s.iter == trainer.total()) log << log_row(s) << "\n" << std::flush;
  });
  out.iteration = trainer.iteration();
  out.total = trainer.total();
  save_checkpoint(make_checkpoint(net, config.to_json(), phase_name(phase), trainer.iteration(), &trainer.adam()),
                  out.checkpoint);
  return out;
}

// ---- inference ----

RgbImage infer_rgb(const TsaNet<float>& net, const RawImage& raw, const RgbImage& pq,
                   const RawImage& pe, const CfaSpec& spec) {
  if (pq.height != raw.height || pq.width != raw.width || pe.height != raw.height || pe.width != raw.width) {
    throw ShapeError("infer", Shape{raw.height, raw.width}, Shape{pq.height, pq.width}, "maps must match the raw frame");
  }
  Sample s;
  s.degraded = raw;
  s.degraded.events.assign(raw.data.size(), 0);
  for (std::size_t i = 0; i < raw.data.size(); ++i) s.degraded.events[i] = pe.data[i] > 0.5f ? 1 : 0;
  s.inpainted = coarse_inpaint(s.degraded, spec);
  s.maps = {raw.height, raw.width, pq.data, pe.data};
  return network_demosaicer(net)(s);
}

// ---- ablations ----

std::vector<ToggleCase> table_iv_cases() {
  auto t = [](bool qcsa, bool spa, bool rvss, bool ffm) { return Toggles{qcsa, spa, rvss, ffm}; };
  return {{1, t(false, false, true, true)}, {2, t(true, false, true, true)}, {3, t(false, true, true, true)},
          {4, t(true, true, false, true)},  {5, t(true, true, true, false)},  {6, t(true, true, true, true)}};
}

Toggles parse_toggles(const std::string& list) {
  if (list == "all") return {};
  Toggles t{false, false, false, false};
  if (list == "none" || list.empty()) return t;
  std::stringstream ss(list);
  std::string name;
  while (std::getline(ss, name, ',')) {
    if (name == "qcsa") t.qcsa = true;
    else if (name == "spa") t.spa = true;
    else if (name == "rvss") t.rvss = true;
    else if (name == "ffm") t.ffm = true;
    else throw ConfigError("unknown toggle '" + name + "' (expected qcsa, spa, rvss, ffm)");
  }
  return t;
}

namespace {

TrainConfig budget_config(const RunConfig& config, const AblationBudget& b) {
  TrainConfig t = config.train;
  t.patch_size = b.patch;
  t.batch_size = b.batch;
  t.lr_start = b.lr_start;
  t.lr_end = b.lr_start * 1e-3;
  t.freeze.clear();
  t.loss_mode = LossMode::kFinalOnly;
  return t;
}

void train_for(TsaNet<float>& net, const TrainConfig& t, const TrainData& data, Phase phase,
               std::int64_t steps, std::uint64_t seed) {
  if (steps <= 0) return;
  Trainer tr(net, t, data, phase, seed);
  tr.set_total(steps);
  run_steps(tr, -1);
}

}  // namespace

std::vector<ToggleRow> ablate_toggles(const RunConfig& config, const std::vector<ToggleCase>& cases,
                                      const AblationBudget& budget) {
  const TrainData data = load_train_data(config);
  const auto holdout = holdout_batch(data, budget.patch, budget.holdout, config.seed);
  const auto t = budget_config(config, budget);
  std::vector<ToggleRow> rows;
  for (const auto& c : cases) {
    ModelConfig m = config.model;
    m.toggles = c.toggles;
    TsaNet<float> net(m);
    ToggleRow row;
    row.id = c.id;
    row.toggles = c.toggles;
    const auto cost = count_flops(net, budget.flops_size, budget.flops_size);
    row.params_m = static_cast<double>(cost.params_total) / 1e6;
    row.flops_g = static_cast<double>(cost.flops_total) / 1e9;
    train_for(net, t, data, Phase::kPretrainQ2Q, budget.pretrain_steps, config.seed);
    train_for(net, t, data, Phase::kPretrainQ2R, budget.pretrain_steps, config.seed);
    train_for(net, t, data, Phase::kJoint, budget.joint_steps, config.seed);
    row.quality = evaluate_holdout(net, holdout, t.charbonnier_eps);
    rows.push_back(row);
  }
  return rows;
}

std::string strategy_trainable(JointStrategy s) {
  switch (s) {
    case JointStrategy::kNone: return "None";
    case JointStrategy::kFreezeQ2Q: return "Q2R";
    case JointStrategy::kScratch: return "Q2Q + Q2R (scratch)";
    default: return "Q2Q + Q2R";
  }
}

std::string strategy_loss(JointStrategy s) {
  switch (s) {
    case JointStrategy::kNone: return "N/A";
    case JointStrategy::kDual: return "Q2Q + Q2R losses";
    default: return "Q2R loss";
  }
}

std::vector<JointRow> ablate_joint(const RunConfig& config, const std::vector<JointStrategy>& strategies,
                                   const AblationBudget& budget, std::uint64_t seed) {
  const TrainData data = load_train_data(config);
  const auto holdout = holdout_batch(data, budget.patch, budget.holdout, config.seed);
  const auto t = budget_config(config, budget);
  ModelConfig m = config.model;
  m.seed = seed;
  TsaNet<float> pre(m);
  const bool need_pre = std::any_of(strategies.begin(), strategies.end(), [](auto s) { return s != JointStrategy::kScratch; });
  if (need_pre) {
    train_for(pre, t, data, Phase::kPretrainQ2Q, budget.pretrain_steps, seed);
    train_for(pre, t, data, Phase::kPretrainQ2R, budget.pretrain_steps, seed);
  }
  std::vector<JointRow> rows;
  for (auto s : strategies) {
    TsaNet<float> net(m);
    if (s != JointStrategy::kScratch) copy_params(pre, net);
    TrainConfig jt = t;
    if (s == JointStrategy::kFreezeQ2Q) jt.freeze = {"q2q."};
    if (s == JointStrategy::kDual) jt.loss_mode = LossMode::kDual;
    // Scratch gets the compute of both pretraining runs plus the joint phase.
    const auto steps = s == JointStrategy::kScratch ? budget.pretrain_steps + budget.joint_steps : budget.joint_steps;
    if (s != JointStrategy::kNone) train_for(net, jt, data, Phase::kJoint, steps, seed);
    rows.push_back({s, evaluate_holdout(net, holdout, t.charbonnier_eps)});
  }
  return rows;
}

namespace {

std::string mark(bool on) { return on ? "x" : "-"; }

}  // namespace

std::string format_toggle_table(const std::vector<ToggleRow>& rows) {
  std::ostringstream out;
  out << "case,qcsa,spa,rvss,ffm,params_m,flops_g,psnr_db,ssim\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%s,%s,%s,%s,%.4f,%.4f,%.3f,%.4f\n", r.id, mark(r.toggles.qcsa).c_str(),
                  mark(r.toggles.spa).c_str(), mark(r.toggles.rvss).c_str(), mark(r.toggles.ffm).c_str(), r.params_m,
                  r.flops_g, r.quality.final_psnr, r.quality.final_ssim);
    out << buf;
  }
  return out.str();
}

std::string format_joint_table(const std::vector<JointRow>& rows) {
  std::ostringstream out;
  out << "trainable,loss,q2q_psnr_db,q2q_ssim,final_psnr_db,final_ssim,final_loss\n";
  char buf[200];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%s,%.3f,%.4f,%.3f,%.4f,%.6f\n", strategy_trainable(r.strategy).c_str(),
                  strategy_loss(r.strategy).c_str(), r.quality.q2q_psnr, r.quality.q2q_ssim, r.quality.final_psnr,
                  r.quality.final_ssim, r.quality.final_loss);
    out << buf;
  }
  return out.str();
}

}  // namespace tsanet
