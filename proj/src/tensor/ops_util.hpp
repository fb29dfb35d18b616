// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <memory>
#include <string>
#include <vector>

#include "tsanet/cost.hpp"
#include "tsanet/ops.hpp"
#include "tsanet/tensor.hpp"

namespace tsanet::ops::detail {

using tsanet::detail::Node;

// Grad buffer of a parent, or nullptr when the parent does not need one.
template <typename T>
T* grad_of(const std::shared_ptr<Node<T>>& parent) {
  if (!parent->requires_grad) return nullptr;
  return parent->ensure_grad().data();
}

inline bool is_suffix(const Shape& full, const Shape& suffix) {
  if (suffix.size() > full.size()) return false;
  return std::equal(suffix.rbegin(), suffix.rend(), full.rbegin());
}

template <typename T>
void require_rank(const char* op, const Tensor<T>& x, std::size_t rank) {
  if (x.shape().size() != rank) {
    throw ShapeError(op, x.shape(), Shape(rank, -1), "expected rank " + std::to_string(rank));
  }
}

}  // namespace tsanet::ops::detail

#define TSANET_INSTANTIATE_UNARY(name)                              \
  template Tensor<float> name<float>(const Tensor<float>&);         \
  template Tensor<double> name<double>(const Tensor<double>&);

#define TSANET_INSTANTIATE_BINARY(name)                                                  \
  template Tensor<float> name<float>(const Tensor<float>&, const Tensor<float>&);        \
  template Tensor<double> name<double>(const Tensor<double>&, const Tensor<double>&);
