// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

// Two-step training: pretrain Q2Q, pretrain Q2R, then joint fine-tuning
// with a single loss on the final RGB. Every phase runs its own cosine
// schedule; data is drawn i.i.d. from the image pool with seeds derived
// from (seed, iteration, slot), so a resumed run replays the same stream.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tsanet/model.hpp"

namespace tsanet {

enum class Phase { kPretrainQ2Q, kPretrainQ2R, kJoint };
enum class LossMode { kFinalOnly, kDual };

std::string phase_name(Phase p);
Phase parse_phase(const std::string& s);  // ConfigError
std::string loss_mode_name(LossMode m);
LossMode parse_loss_mode(const std::string& s);

struct TrainConfig {
  std::int64_t patch_size = 128;
  std::int64_t batch_size = 4;
  std::int64_t iterations = 1000;  // total over the three phases
  std::vector<double> split = {0.25, 0.25, 0.5};
  double lr_start = 2e-4;
  double lr_end = 1e-7;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double charbonnier_eps = 1e-3;
  double clip_norm = 1.0;
  std::vector<std::string> freeze;  // parameter name prefixes
  LossMode loss_mode = LossMode::kFinalOnly;
  std::int64_t log_every = 1;

  // Iterations given to one phase under `split`; at least 1.
  std::int64_t phase_iterations(Phase p) const;
  void validate() const;
};

// lr(t) = lr_end + (lr_start - lr_end) * (1 + cos(pi t / T)) / 2, 0 <= t <= T.
double cosine_lr(std::int64_t t, std::int64_t total, double lr_start, double lr_end);

// First and second moments per parameter name, float like the weights.
struct AdamState {
  std::int64_t step = 0;
  std::map<std::string, std::vector<float>> m, v;
};

// One bias-corrected Adam update of every parameter named in `names`,
// using the gradients currently held by the store.
void adam_step(ParamStore<float>& params, const std::vector<std::string>& names, AdamState& state,
               double lr, const TrainConfig& config);

// Scales the gradients of `names` so their global L2 norm is at most
// max_norm. Returns the norm before clipping.
double clip_grad_norm(ParamStore<float>& params, const std::vector<std::string>& names,
                      double max_norm);

// Parameters a phase may update: its stage prefix minus frozen prefixes.
std::vector<std::string> phase_scope(const ParamStore<float>& params, Phase phase,
                                     const std::vector<std::string>& freeze);

struct TrainData {
  std::vector<RgbImage> images;
  CfaSpec cfa = CfaSpec::quad_bayer_default();
  double noise_sigma = 0.0;
};

// Batch for iteration `iter`: each slot picks an image and a lattice-aligned
// patch, then synthesizes with its own noise seed.
std::vector<Sample> draw_batch(const TrainData& data, std::int64_t patch, std::int64_t batch,
                               std::uint64_t seed, std::int64_t iter);

struct StepLog {
  std::int64_t iter = 0;  // 1-based within the phase
  Phase phase = Phase::kJoint;
  double lr = 0.0;
  double loss_final = 0.0;
  double loss_q2q = -1.0;  // < 0 when not computed
  double wall_ms = 0.0;
};

std::string log_header();
std::string log_row(const StepLog& s);

class Trainer {
 public:
  Trainer(TsaNet<float>& net, const TrainConfig& config, const TrainData& data, Phase phase,
          std::uint64_t seed);

  // Runs iteration `iteration()` and advances. Throws ValueError once the
  // phase budget is used up.
  StepLog step();
  bool done() const { return iteration_ >= total_; }
  std::int64_t iteration() const { return iteration_; }
  std::int64_t total() const { return total_; }
  Phase phase() const { return phase_; }
  AdamState& adam() { return adam_; }
  const AdamState& adam() const { return adam_; }
  // Restores iteration counter and optimizer state (resume).
  void restore(std::int64_t iteration, AdamState adam);
  // Overrides the phase budget (ablation runs, tests).
  void set_total(std::int64_t total);

 private:
  TsaNet<float>& net_;
  TrainConfig config_;
  const TrainData& data_;
  Phase phase_;
  std::uint64_t seed_;
  std::vector<std::string> scope_;
  std::int64_t iteration_ = 0;
  std::int64_t total_ = 1;
  AdamState adam_;
};

}  // namespace tsanet
