// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include "tsanet/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tsanet/rng.hpp"

namespace tsanet {

namespace {

template <typename T>
double eval_scalar(const std::function<Tensor<T>()>& loss) {
  NoGradGuard guard;
  const Tensor<T> value = loss();
  if (value.numel() != 1) throw ShapeError("finite_diff_check", value.shape(), Shape{}, "loss must be scalar");
  const double v = static_cast<double>(value.item());
  if (!std::isfinite(v)) throw ValueError("finite_diff_check: loss is not finite");
  return v;
}

}  // namespace

template <typename T>
GradCheckReport finite_diff_check(const std::function<Tensor<T>()>& loss,
                                  std::vector<Tensor<T>> leaves, double step, double tol,
                                  std::int64_t max_coords_per_leaf, std::uint64_t seed) {
  std::vector<bool> previous;
  for (auto& leaf : leaves) {
    previous.push_back(leaf.requires_grad());
    leaf.set_requires_grad(true);
    leaf.zero_grad();
  }
  const Tensor<T> value = loss();
  if (!std::isfinite(static_cast<double>(value.item()))) {
    throw ValueError("finite_diff_check: loss is not finite");
  }
  value.backward();

  GradCheckReport report;
  Rng rng(seed);
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    auto& leaf = leaves[li];
    const std::vector<T> analytic(leaf.grad().begin(), leaf.grad().end());
    std::vector<std::int64_t> coords(static_cast<std::size_t>(leaf.numel()));
    std::iota(coords.begin(), coords.end(), 0);
    if (max_coords_per_leaf > 0 && leaf.numel() > max_coords_per_leaf) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(static_cast<std::size_t>(max_coords_per_leaf));
      std::sort(coords.begin(), coords.end());
    }
    for (const auto i : coords) {
      T& slot = leaf.data()[static_cast<std::size_t>(i)];
      const T original = slot;
      slot = static_cast<T>(original + step);
      const double plus = eval_scalar(loss);
      slot = static_cast<T>(original - step);
      const double minus = eval_scalar(loss);
      slot = original;
      const double numeric = (plus - minus) / (2.0 * step);
      const double a = static_cast<double>(analytic[static_cast<std::size_t>(i)]);
      const double abs_err = std::abs(a - numeric);
      const double rel = abs_err / std::max({std::abs(a), std::abs(numeric), kGradCheckFloor});
      report.max_abs_err = std::max(report.max_abs_err, abs_err);
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst = std::to_string(li) + "[" + std::to_string(i) + "]";
      }
      ++report.checked;
    }
  }
  for (std::size_t li = 0; li < leaves.size(); ++li) leaves[li].set_requires_grad(previous[li]);
  report.pass = report.max_rel_err < tol;
  return report;
}

template <typename T>
GradCheckReport finite_diff_check(const std::function<Tensor<T>(const Tensor<T>&)>& f,
                                  const Tensor<T>& x, double step, double tol) {
  Tensor<T> leaf = x;
  return finite_diff_check<T>([&f, &leaf] { return f(leaf); }, {leaf}, step, tol);
}

template GradCheckReport finite_diff_check(const std::function<Tensor<float>()>&,
                                           std::vector<Tensor<float>>, double, double,
                                           std::int64_t, std::uint64_t);
template GradCheckReport finite_diff_check(const std::function<Tensor<double>()>&,
                                           std::vector<Tensor<double>>, double, double,
                                           std::int64_t, std::uint64_t);
template GradCheckReport finite_diff_check(
    const std::function<Tensor<float>(const Tensor<float>&)>&, const Tensor<float>&, double,
    double);
template GradCheckReport finite_diff_check(
    const std::function<Tensor<double>(const Tensor<double>&)>&, const Tensor<double>&, double,
    double);

}  // namespace tsanet
