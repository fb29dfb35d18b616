// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "tsanet/rng.hpp"
#include "tsanet/tensor.hpp"

namespace tsanet::testing {

template <typename T = double>
Tensor<T> random_tensor(const Shape& shape, std::uint64_t seed, double lo = -1.0,
                        double hi = 1.0, bool requires_grad = false) {
  Rng rng(seed);
  std::vector<T> data(static_cast<std::size_t>(numel_of(shape)));
  for (auto& v : data) v = static_cast<T>(lo + (hi - lo) * uniform01(rng));
  return Tensor<T>::from_data(shape, std::move(data), requires_grad);
}

// Random linear functional of an arbitrary tensor, so gradchecks see
// nontrivial upstream gradients.
template <typename T>
Tensor<T> scalarize(const Tensor<T>& y, std::uint64_t seed);

}  // namespace tsanet::testing

#include "tsanet/ops.hpp"

namespace tsanet::testing {

template <typename T>
Tensor<T> scalarize(const Tensor<T>& y, std::uint64_t seed) {
  const auto w = random_tensor<T>(y.shape(), seed ^ 0x5eed, -1.0, 1.0);
  return ops::sum(ops::mul(y, w));
}

}  // namespace tsanet::testing

#include "tsanet/blocks.hpp"

namespace tsanet::testing {

// Replaces every parameter with uniform noise around its role's scale, so
// gradchecks exercise every path (zero-initialized outputs would hide them).
template <typename T>
void randomize_params(ParamStore<T>& store, std::uint64_t seed, double amp = 0.3) {
  Rng rng(seed);
  for (const auto& e : store.entries()) {
    Tensor<T> t = e.value;
    auto d = t.data();
    const bool around_one = e.name.ends_with(".gain") || e.name.ends_with(".skip");
    for (auto& v : d) {
      const double u = amp * (2.0 * uniform01(rng) - 1.0);
      v = static_cast<T>(around_one ? 1.0 + u : u);
    }
  }
}

template <typename T>
void fill(Tensor<T> t, double value) {
  for (auto& v : t.data()) v = static_cast<T>(value);
}

template <typename T>
void set_identity(Tensor<T> w) {
  fill(w, 0.0);
  const auto n = w.dim(0);
  for (std::int64_t i = 0; i < n; ++i) w.data()[static_cast<std::size_t>(i * w.dim(1) + i)] = T(1);
}

template <typename T>
std::vector<Tensor<T>> all_params(const ParamStore<T>& store) {
  std::vector<Tensor<T>> out;
  for (const auto& e : store.entries()) out.push_back(e.value);
  return out;
}

// Straight-line recurrence for one channel of a 1-D selective scan.
inline std::vector<double> naive_scan(const std::vector<double>& x, const std::vector<double>& delta,
                                      const std::vector<double>& a,
                                      const std::vector<std::vector<double>>& b,
                                      const std::vector<std::vector<double>>& c, double d) {
  const std::size_t n = a.size();
  std::vector<double> h(n, 0.0), y(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      h[j] = std::exp(delta[t] * a[j]) * h[j] + delta[t] * b[t][j] * x[t];
      acc += c[t][j] * h[j];
    }
    y[t] = acc + d * x[t];
  }
  return y;
}

}  // namespace tsanet::testing
