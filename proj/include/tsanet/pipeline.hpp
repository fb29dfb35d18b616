// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

// Command-level workflows built on the library: dataset simulation, phase
// training with checkpoints and logs, inference, and the ablation studies.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tsanet/checkpoint.hpp"
#include "tsanet/config.hpp"
#include "tsanet/metrics.hpp"

namespace tsanet {

// ---- data ----

// The manifest images, or io.procedural_images procedural ones.
TrainData load_train_data(const RunConfig& config);

// ---- simulate ----

struct SimulateResult {
  std::vector<std::string> written;  // artifact paths, in order
  std::vector<std::string> errors;   // one per failed input
};

// For each *.ppm in `in_dir` (sorted by name): writes <stem>_raw.pgm (masked,
// noisy raw), <stem>_clean.pgm, <stem>_pq.ppm, <stem>_pe.pgm and appends a
// manifest.txt line "<rgb>\t<raw>\t<clean>\t<pq>\t<pe>".
SimulateResult simulate_dir(const RunConfig& config, const std::filesystem::path& in_dir,
                            const std::filesystem::path& out_dir);

// ---- training ----

// Fixed evaluation batch drawn from the pool (independent of training).
std::vector<Sample> holdout_batch(const TrainData& data, std::int64_t patch, std::int64_t count,
                                  std::uint64_t seed);

struct HoldoutLoss {
  double final_loss = 0.0;  // Charbonnier of the RGB output
  double q2q_loss = 0.0;    // Charbonnier of the Q2Q output vs the clean quad
  double final_psnr = 0.0;
  double final_ssim = 0.0;
  double q2q_psnr = 0.0;
  double q2q_ssim = 0.0;
};

HoldoutLoss evaluate_holdout(const TsaNet<float>& net, const std::vector<Sample>& samples,
                             double charbonnier_eps);

using StepCallback = std::function<void(const StepLog&)>;

// Runs `steps` iterations (all remaining when < 0) of `trainer`.
void run_steps(Trainer& trainer, std::int64_t steps, const StepCallback& on_step = {});

struct PhaseOptions {
  std::optional<std::filesystem::path> resume;  // checkpoint of this phase
  std::int64_t max_steps = -1;                  // stop early (checkpoint still written)
};

struct PhaseOutcome {
  std::filesystem::path checkpoint;
  std::filesystem::path log;
  std::int64_t iteration = 0;
  std::int64_t total = 0;
  double last_loss = 0.0;
};

// The `train` command: initializes or resumes, trains one phase, appends the
// CSV log at <out_dir>/train_<phase>.csv and writes
// <checkpoint_dir>/<phase>.ckpt. Joint training loads both pretrained stages
// from the checkpoint dir unless train.from_scratch is set.
PhaseOutcome train_command(const RunConfig& config, Phase phase, const PhaseOptions& options);

// ---- inference ----

// Builds the network input from a raw frame (events at Pe > 0.5 are
// re-inpainted) and returns the clamped RGB estimate.
RgbImage infer_rgb(const TsaNet<float>& net, const RawImage& raw, const RgbImage& pq,
                   const RawImage& pe, const CfaSpec& spec);

// ---- ablations ----

struct AblationBudget {
  std::int64_t pretrain_steps = 60;  // per stage
  std::int64_t joint_steps = 60;
  std::int64_t patch = 32;
  std::int64_t batch = 2;
  std::int64_t holdout = 4;
  std::int64_t flops_size = 128;  // reference resolution for FLOPs
  double lr_start = 1e-3;
};

struct ToggleCase {
  int id = 0;
  Toggles toggles;
};

// The six module cases of the ablation table.
std::vector<ToggleCase> table_iv_cases();
// Parses "qcsa,spa" style lists of enabled modules; unknown names throw
// ConfigError. "all" and "none" are accepted.
Toggles parse_toggles(const std::string& list);

struct ToggleRow {
  int id = 0;
  Toggles toggles;
  double params_m = 0.0;
  double flops_g = 0.0;
  HoldoutLoss quality;
};

std::vector<ToggleRow> ablate_toggles(const RunConfig& config, const std::vector<ToggleCase>& cases,
                                      const AblationBudget& budget);

enum class JointStrategy { kNone, kFreezeQ2Q, kDual, kFinalOnly, kScratch };
std::string strategy_trainable(JointStrategy s);
std::string strategy_loss(JointStrategy s);

struct JointRow {
  JointStrategy strategy = JointStrategy::kNone;
  HoldoutLoss quality;
};

// Pretrains both stages once, then applies each strategy to a copy. The
// four cases of the joint-training table are kNone, kFreezeQ2Q, kDual and
// kFinalOnly; kScratch trains the joint phase from initialization for
// pretrain_steps + joint_steps steps. A pretraining step runs one stage and a
// joint step runs both, so this matches the two-step schedule's compute.
std::vector<JointRow> ablate_joint(const RunConfig& config, const std::vector<JointStrategy>& strategies,
                                   const AblationBudget& budget, std::uint64_t seed);

std::string format_toggle_table(const std::vector<ToggleRow>& rows);
std::string format_joint_table(const std::vector<JointRow>& rows);

}  // namespace tsanet
