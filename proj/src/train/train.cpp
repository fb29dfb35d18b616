// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include "tsanet/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <unordered_set>

#include "tsanet/rng.hpp"

namespace tsanet {

std::string phase_name(Phase p) {
  switch (p) {
    case Phase::kPretrainQ2Q: return "pretrain_q2q";
    case Phase::kPretrainQ2R: return "pretrain_q2r";
    case Phase::kJoint: return "joint";
  }
  return "?";
}

Phase parse_phase(const std::string& s) {
  if (s == "pretrain_q2q") return Phase::kPretrainQ2Q;
  if (s == "pretrain_q2r") return Phase::kPretrainQ2R;
  if (s == "joint") return Phase::kJoint;
  throw ConfigError("unknown phase '" + s + "' (expected pretrain_q2q, pretrain_q2r or joint)");
}

std::string loss_mode_name(LossMode m) { return m == LossMode::kDual ? "dual" : "final_only"; }

LossMode parse_loss_mode(const std::string& s) {
  if (s == "final_only") return LossMode::kFinalOnly;
  if (s == "dual") return LossMode::kDual;
  throw ConfigError("unknown loss mode '" + s + "' (expected final_only or dual)");
}

std::int64_t TrainConfig::phase_iterations(Phase p) const {
  const double frac = split.at(static_cast<std::size_t>(p));
  return std::max<std::int64_t>(1, std::llround(static_cast<double>(iterations) * frac));
}

void TrainConfig::validate() const {
  if (patch_size < 16 || patch_size % 4) throw ConfigError("train: patch_size must be a multiple of 4, >= 16");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (iterations < 1) throw ConfigError("train: iterations must be >= 1");
  if (split.size() != 3) throw ConfigError("train: split needs 3 fractions (q2q, q2r, joint)");
  double sum = 0;
  for (double f : split) {
    if (!(f >= 0.0)) throw ConfigError("train: split fractions must be >= 0");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("train: split fractions must sum to 1");
  if (!(lr_end > 0.0 && lr_end < lr_start)) throw ConfigError("train: need 0 < lr_end < lr_start");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("train: betas must lie in [0, 1)");
  if (!(adam_eps > 0.0) || !(charbonnier_eps > 0.0)) throw ConfigError("train: eps values must be > 0");
  if (!(clip_norm > 0.0)) throw ConfigError("train: clip_norm must be > 0");
  if (log_every < 1) throw ConfigError("train: log_every must be >= 1");
}

double cosine_lr(std::int64_t t, std::int64_t total, double lr_start, double lr_end) {
  if (total < 1 || t < 0 || t > total) {
    throw ValueError("cosine_lr: t=" + std::to_string(t) + " outside [0, " + std::to_string(total) + "]");
  }
  const double c = std::cos(std::numbers::pi * static_cast<double>(t) / static_cast<double>(total));
  return lr_end + 0.5 * (lr_start - lr_end) * (1.0 + c);
}

namespace {

// Parameters of `names`, in store order.
std::vector<Tensor<float>> select(const ParamStore<float>& params, const std::vector<std::string>& names,
                                  std::vector<const std::string*>* out_names = nullptr) {
  const std::unordered_set<std::string> want(names.begin(), names.end());
  std::vector<Tensor<float>> out;
  for (const auto& e : params.entries()) {
    if (!want.count(e.name)) continue;
    out.push_back(e.value);
    if (out_names) out_names->push_back(&e.name);
  }
  return out;
}

}  // namespace

void adam_step(ParamStore<float>& params, const std::vector<std::string>& names, AdamState& state,
               double lr, const TrainConfig& config) {
  ++state.step;
  const double b1 = config.beta1, b2 = config.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  std::vector<const std::string*> selected;
  auto tensors = select(params, names, &selected);
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    auto& p = tensors[k];
    const auto n = static_cast<std::size_t>(p.numel());
    auto& m = state.m[*selected[k]];
    auto& v = state.v[*selected[k]];
    if (m.size() != n) m.assign(n, 0.0f);
    if (v.size() != n) v.assign(n, 0.0f);
    if (!p.has_grad()) p.zero_grad();
    auto w = p.data();
    const auto g = std::as_const(p).grad();
    for (std::size_t i = 0; i < n; ++i) {
      const double gi = g[i];
      m[i] = static_cast<float>(b1 * m[i] + (1.0 - b1) * gi);
      v[i] = static_cast<float>(b2 * v[i] + (1.0 - b2) * gi * gi);
      const double mhat = m[i] / c1, vhat = v[i] / c2;
      w[i] = static_cast<float>(w[i] - lr * mhat / (std::sqrt(vhat) + config.adam_eps));
    }
  }
}

double clip_grad_norm(ParamStore<float>& params, const std::vector<std::string>& names,
                      double max_norm) {
  auto tensors = select(params, names);
  double sq = 0.0;
  for (const auto& t : tensors) {
    if (!t.has_grad()) continue;
    for (float g : t.grad()) sq += static_cast<double>(g) * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double f = max_norm / norm;
    for (auto& t : tensors) {
      if (!t.has_grad()) continue;
      for (float& g : t.grad()) g = static_cast<float>(g * f);
    }
  }
  return norm;
}

std::vector<std::string> phase_scope(const ParamStore<float>& params, Phase phase,
                                     const std::vector<std::string>& freeze) {
  const std::string stage = phase == Phase::kPretrainQ2Q ? "q2q." : phase == Phase::kPretrainQ2R ? "q2r." : "";
  std::vector<std::string> out;
  for (const auto& e : params.entries()) {
    if (!stage.empty() && !e.name.starts_with(stage)) continue;
    bool frozen = false;
    for (const auto& f : freeze) frozen = frozen || e.name.starts_with(f);
    if (!frozen) out.push_back(e.name);
  }
  return out;
}

std::vector<Sample> draw_batch(const TrainData& data, std::int64_t patch, std::int64_t batch,
                               std::uint64_t seed, std::int64_t iter) {
  if (data.images.empty()) throw ValueError("draw_batch: no training images");
  std::vector<Sample> out;
  out.reserve(static_cast<std::size_t>(batch));
  for (std::int64_t k = 0; k < batch; ++k) {
    const auto u = static_cast<std::uint64_t>(iter), s = static_cast<std::uint64_t>(k);
    Rng rng(derive_seed(seed, {u, s, 0}));
    const auto n = data.images.size();
    const auto& img = data.images[std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)))];
    if (img.height < patch || img.width < patch) {
      throw ValueError("draw_batch: image " + std::to_string(img.height) + "x" + std::to_string(img.width) +
                       " is smaller than the " + std::to_string(patch) + " patch");
    }
    const auto corner = draw_patch_corners(img.height, img.width, patch, 1, derive_seed(seed, {u, s, 1}))[0];
    out.push_back(synthesize_sample(crop_rgb(img, corner.y, corner.x, patch, patch), data.cfa,
                                    data.noise_sigma, derive_seed(seed, {u, s, 2})));
  }
  return out;
}

std::string log_header() { return "iter,phase,lr,loss_final,loss_q2q_optional,wall_ms"; }

std::string log_row(const StepLog& s) {
  char q2q[32] = "";
  if (s.loss_q2q >= 0.0) std::snprintf(q2q, sizeof q2q, "%.9g", s.loss_q2q);
  char buf[256];
  std::snprintf(buf, sizeof buf, "%lld,%s,%.9g,%.9g,%s,%.3f", static_cast<long long>(s.iter),
                phase_name(s.phase).c_str(), s.lr, s.loss_final, q2q, s.wall_ms);
  return buf;
}

Trainer::Trainer(TsaNet<float>& net, const TrainConfig& config, const TrainData& data, Phase phase,
                 std::uint64_t seed)
    : net_(net), config_(config), data_(data), phase_(phase), seed_(seed) {
  config_.validate();
  scope_ = phase_scope(net.params(), phase, config.freeze);
  total_ = config_.phase_iterations(phase);
}

void Trainer::restore(std::int64_t iteration, AdamState adam) {
  if (iteration < 0 || iteration > total_) {
    throw ValueError("resume: iteration " + std::to_string(iteration) + " outside the phase budget " + std::to_string(total_));
  }
  iteration_ = iteration;
  adam_ = std::move(adam);
}

void Trainer::set_total(std::int64_t total) {
  if (total < 1) throw ValueError("trainer: budget must be >= 1");
  total_ = total;
}

StepLog Trainer::step() {
  if (done()) throw ValueError("trainer: phase budget exhausted");
  const auto t0 = std::chrono::steady_clock::now();
  StepLog log;
  log.phase = phase_;
  log.lr = cosine_lr(iteration_, total_, config_.lr_start, config_.lr_end);

  // Only in-scope parameters record gradients; the rest act as constants.
  auto& params = net_.params();
  const std::unordered_set<std::string> in_scope(scope_.begin(), scope_.end());
  for (const auto& e : params.entries()) {
    Tensor<float> t = e.value;
    t.set_requires_grad(in_scope.count(e.name) != 0);
  }
  params.zero_grad();

  const auto batch = draw_batch(data_, config_.patch_size, config_.batch_size, seed_, iteration_);
  const auto in = make_inputs<float>(batch);
  const auto target = make_targets<float>(batch);
  const auto eps = config_.charbonnier_eps;
  Tensor<float> loss;
  if (phase_ == Phase::kPretrainQ2Q) {
    loss = ops::charbonnier(net_.forward_q2q(in.inpainted, in.pq, in.pe), target.clean, eps);
    log.loss_final = loss.item();
  } else if (phase_ == Phase::kPretrainQ2R) {
    loss = ops::charbonnier(net_.forward_q2r(target.clean, in.pq), target.rgb, eps);
    log.loss_final = loss.item();
  } else {
    const auto q = net_.forward_q2q(in.inpainted, in.pq, in.pe);
    loss = ops::charbonnier(net_.forward_q2r(q, in.pq), target.rgb, eps);
    log.loss_final = loss.item();
    if (config_.loss_mode == LossMode::kDual) {
      const auto lq = ops::charbonnier(q, target.clean, eps);
      log.loss_q2q = lq.item();
      loss = ops::add(loss, lq);
    }
  }
  loss.backward();
  loss = {};
  clip_grad_norm(params, scope_, config_.clip_norm);
  adam_step(params, scope_, adam_, log.lr, config_);

  for (const auto& e : params.entries()) {
    Tensor<float> t = e.value;
    t.set_requires_grad(true);
  }
  ++iteration_;
  log.iter = iteration_;
  log.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return log;
}

}  // namespace tsanet
