// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include "tsanet/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

namespace tsanet {

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

ShapeError::ShapeError(std::string op, Shape lhs, Shape rhs, const std::string& detail)
    : Error(op + ": shape mismatch " + shape_str(lhs) + " vs " + shape_str(rhs) +
            (detail.empty() ? std::string() : " (" + detail + ")")),
      op_(std::move(op)),
      lhs_(std::move(lhs)),
      rhs_(std::move(rhs)) {}

std::int64_t numel_of(const Shape& shape) {
  std::int64_t n = 1;
  for (auto e : shape) {
    if (e < 0) throw ValueError("negative extent in shape " + shape_str(shape));
    n *= e;
  }
  return n;
}

namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

template <typename T>
Tensor<T> Tensor<T>::zeros(const Shape& shape, bool requires_grad) {
  return full(shape, T(0), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(const Shape& shape, T value, bool requires_grad) {
  auto node = std::make_shared<detail::Node<T>>();
  node->shape = shape;
  node->data.assign(static_cast<std::size_t>(numel_of(shape)), value);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::from_data(const Shape& shape, std::vector<T> data, bool requires_grad) {
  if (numel_of(shape) != static_cast<std::int64_t>(data.size())) {
    throw ShapeError("from_data", shape, Shape{static_cast<std::int64_t>(data.size())},
                     "element count");
  }
  auto node = std::make_shared<detail::Node<T>>();
  node->shape = shape;
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

template <typename T>
std::int64_t Tensor<T>::dim(std::int64_t axis) const {
  const auto r = rank();
  if (axis < 0) axis += r;
  if (axis < 0 || axis >= r) {
    throw ValueError("axis " + std::to_string(axis) + " out of range for shape " +
                     shape_str(shape()));
  }
  return node_->shape[static_cast<std::size_t>(axis)];
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) throw ShapeError("item", shape(), Shape{}, "expected one element");
  return node_->data[0];
}

template <typename T>
void Tensor<T>::set_requires_grad(bool flag) {
  node_->requires_grad = flag;
  if (!flag) node_->grad.clear();
}

template <typename T>
std::span<T> Tensor<T>::grad() {
  return node_->ensure_grad();
}

template <typename T>
std::span<const T> Tensor<T>::grad() const {
  return node_->ensure_grad();
}

template <typename T>
void Tensor<T>::zero_grad() {
  if (node_->requires_grad) node_->grad.assign(node_->data.size(), T(0));
}

template <typename T>
void Tensor<T>::backward() const {
  if (numel() != 1) {
    throw ShapeError("backward", shape(), Shape{}, "loss must be a scalar");
  }
  if (!node_->requires_grad) return;

  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<detail::Node<T>*> order;
  std::unordered_set<detail::Node<T>*> visited;
  std::vector<std::pair<detail::Node<T>*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node<T>* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  // Interior grads are per-pass scratch; leaves accumulate across passes.
  for (auto* node : order) {
    if (!node->is_leaf()) node->grad.assign(node->data.size(), T(0));
  }
  node_->ensure_grad()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node<T>* node = *it;
    if (!node->is_leaf()) node->backward_fn(*node);
  }
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return from_data(shape(), node_->data, false);
}

template <typename T>
Tensor<T> Tensor<T>::clone() const {
  return from_data(shape(), node_->data, node_->requires_grad);
}

template <typename T>
bool any_requires_grad(const std::vector<const Tensor<T>*>& inputs) {
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor<T>* t) { return t->defined() && t->requires_grad(); });
}

template <typename T>
Tensor<T> make_result(const std::vector<const Tensor<T>*>& inputs, Shape shape,
                      std::vector<T> data, std::function<void(detail::Node<T>&)> backward) {
  auto node = std::make_shared<detail::Node<T>>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  if (grad_enabled() && backward && any_requires_grad(inputs)) {
    node->requires_grad = true;
    node->parents.reserve(inputs.size());
    for (const auto* t : inputs) node->parents.push_back(t->node());
    node->backward_fn = std::move(backward);
  }
  return Tensor<T>(std::move(node));
}

template class Tensor<float>;
template class Tensor<double>;
template Tensor<float> make_result(const std::vector<const Tensor<float>*>&, Shape,
                                   std::vector<float>,
                                   std::function<void(detail::Node<float>&)>);
template Tensor<double> make_result(const std::vector<const Tensor<double>*>&, Shape,
                                    std::vector<double>,
                                    std::function<void(detail::Node<double>&)>);
template bool any_requires_grad(const std::vector<const Tensor<float>*>&);
template bool any_requires_grad(const std::vector<const Tensor<double>*>&);

}  // namespace tsanet
