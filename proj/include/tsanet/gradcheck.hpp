// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tsanet/tensor.hpp"

namespace tsanet {

// Relative error is |a - n| / max(|a|, |n|, floor). Components smaller than
// the floor are judged on absolute error instead, since central differences
// cannot resolve them below roundoff.
inline constexpr double kGradCheckFloor = 1e-6;

struct GradCheckReport {
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;
  std::int64_t checked = 0;
  std::string worst;  // "<leaf index>[<element>]" of the max relative error
  bool pass = true;
};

// Compares reverse-mode gradients of the scalar `loss()` with respect to
// every leaf against central differences (loss(x+h) - loss(x-h)) / 2h.
// When max_coords_per_leaf > 0, only that many elements per leaf are probed
// (chosen with `seed`). Throws ValueError if the loss is not finite.
template <typename T>
GradCheckReport finite_diff_check(const std::function<Tensor<T>()>& loss,
                                  std::vector<Tensor<T>> leaves, double step = 1e-5,
                                  double tol = 1e-4, std::int64_t max_coords_per_leaf = 0,
                                  std::uint64_t seed = 0);

// Single-input form: f(x) must return a scalar.
template <typename T>
GradCheckReport finite_diff_check(const std::function<Tensor<T>(const Tensor<T>&)>& f,
                                  const Tensor<T>& x, double step = 1e-5, double tol = 1e-4);

}  // namespace tsanet
