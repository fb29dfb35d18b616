// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

// Dense N-d tensor with tape-based reverse-mode differentiation.
//
// A Tensor is a shared handle to a graph node. Ops executed while grad mode
// is enabled and at least one input requires grad record a backward closure
// on their output; Tensor::backward() replays those closures in reverse
// topological order. Feature maps use NHWC layout throughout the toolkit.

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "tsanet/error.hpp"

namespace tsanet {

std::int64_t numel_of(const Shape& shape);

namespace detail {

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until first needed
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this->grad, accumulates into parents' grad.
  std::function<void(Node&)> backward_fn;

  bool is_leaf() const { return !backward_fn; }
  std::vector<T>& ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), T(0));
    return grad;
  }
};

}  // namespace detail

// Grad mode is thread-local; NoGradGuard disables recording in its scope.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

template <typename T>
class Tensor {
 public:
  using value_type = T;
  using NodePtr = std::shared_ptr<detail::Node<T>>;

  Tensor() = default;
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}

  static Tensor zeros(const Shape& shape, bool requires_grad = false);
  static Tensor full(const Shape& shape, T value, bool requires_grad = false);
  static Tensor from_data(const Shape& shape, std::vector<T> data,
                          bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::int64_t rank() const { return static_cast<std::int64_t>(node_->shape.size()); }
  // Negative axes count from the back.
  std::int64_t dim(std::int64_t axis) const;
  std::int64_t numel() const { return static_cast<std::int64_t>(node_->data.size()); }

  std::span<T> data() { return node_->data; }
  std::span<const T> data() const { return node_->data; }
  T item() const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool flag);
  bool has_grad() const { return node_->grad.size() == node_->data.size(); }
  std::span<T> grad();
  std::span<const T> grad() const;
  void zero_grad();

  // Accumulates d(this)/d(leaf) into every reachable leaf's grad. `this`
  // must be a scalar.
  void backward() const;

  // Same storage copy, no graph history.
  Tensor detach() const;
  Tensor clone() const;

  const NodePtr& node() const { return node_; }

 private:
  NodePtr node_;
};

// Constructs an op output. When recording is active and any input requires
// grad, the output is linked to those inputs and `backward` is stored.
template <typename T>
Tensor<T> make_result(const std::vector<const Tensor<T>*>& inputs, Shape shape,
                      std::vector<T> data,
                      std::function<void(detail::Node<T>&)> backward);

template <typename T>
bool any_requires_grad(const std::vector<const Tensor<T>*>& inputs);

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace tsanet
