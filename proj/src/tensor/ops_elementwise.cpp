// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "ops_util.hpp"

namespace tsanet::ops {

using detail::grad_of;
using detail::is_suffix;

namespace {

enum class BinaryKind { kAdd, kSub, kMul };

template <typename T>
Tensor<T> binary(const char* name, BinaryKind kind, const Tensor<T>& a, const Tensor<T>& b) {
  const bool same = a.shape() == b.shape();
  if (!same && (kind == BinaryKind::kSub || !is_suffix(a.shape(), b.shape()))) {
    throw ShapeError(name, a.shape(), b.shape());
  }
  const auto n = a.numel();
  const auto m = b.numel();
  auto ad = a.data();
  auto bd = b.data();
  std::vector<T> out(static_cast<std::size_t>(n));
  for (std::int64_t o = 0; o < n; o += m) {
    const T* pa = ad.data() + o;
    T* po = out.data() + o;
    switch (kind) {
      case BinaryKind::kAdd:
        for (std::int64_t j = 0; j < m; ++j) po[j] = pa[j] + bd[j];
        break;
      case BinaryKind::kSub:
        for (std::int64_t j = 0; j < m; ++j) po[j] = pa[j] - bd[j];
        break;
      case BinaryKind::kMul:
        for (std::int64_t j = 0; j < m; ++j) po[j] = pa[j] * bd[j];
        break;
    }
  }
  if (kind == BinaryKind::kMul) count_macs(n);
  return make_result<T>({&a, &b}, a.shape(), std::move(out), [kind, n, m](detail::Node<T>& self) {
    const T* g = self.grad.data();
    const auto& pa = self.parents[0];
    const auto& pb = self.parents[1];
    const T* bv = pb->data.data();
    if (T* ga = grad_of(pa)) {
      if (kind == BinaryKind::kMul) {
        for (std::int64_t o = 0; o < n; o += m)
          for (std::int64_t j = 0; j < m; ++j) ga[o + j] += g[o + j] * bv[j];
      } else {
        for (std::int64_t i = 0; i < n; ++i) ga[i] += g[i];
      }
    }
    if (T* gb = grad_of(pb)) {
      const T* av = pa->data.data();
      for (std::int64_t o = 0; o < n; o += m) {
        switch (kind) {
          case BinaryKind::kAdd:
            for (std::int64_t j = 0; j < m; ++j) gb[j] += g[o + j];
            break;
          case BinaryKind::kSub:
            for (std::int64_t j = 0; j < m; ++j) gb[j] -= g[o + j];
            break;
          case BinaryKind::kMul:
            for (std::int64_t j = 0; j < m; ++j) gb[j] += g[o + j] * av[o + j];
            break;
        }
      }
    }
  });
}

// Unary op given value and derivative functors. The derivative receives
// (input, output).
template <typename T, typename F, typename D>
Tensor<T> unary(const Tensor<T>& a, F f, D df) {
  auto ad = a.data();
  std::vector<T> out(ad.size());
  for (std::size_t i = 0; i < ad.size(); ++i) out[i] = f(ad[i]);
  return make_result<T>({&a}, a.shape(), std::move(out), [df](detail::Node<T>& self) {
    const auto& p = self.parents[0];
    T* ga = grad_of(p);
    if (!ga) return;
    const std::size_t n = self.data.size();
    for (std::size_t i = 0; i < n; ++i) ga[i] += self.grad[i] * df(p->data[i], self.data[i]);
  });
}

template <typename T>
T sigmoid(T x) {
  return x >= T(0) ? T(1) / (T(1) + std::exp(-x)) : std::exp(x) / (T(1) + std::exp(x));
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return binary("add", BinaryKind::kAdd, a, b);
}
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return binary("sub", BinaryKind::kSub, a, b);
}
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return binary("mul", BinaryKind::kMul, a, b);
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  return unary(
      a, [factor](T x) { return x * factor; }, [factor](T, T) { return factor; });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T value) {
  return unary(
      a, [value](T x) { return x + value; }, [](T, T) { return T(1); });
}

template <typename T>
Tensor<T> exp(const Tensor<T>& a) {
  return unary(
      a, [](T x) { return std::exp(x); }, [](T, T y) { return y; });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
  return unary(
      a, [](T x) { return x > T(0) ? x : T(0); }, [](T x, T) { return x > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& a) {
  constexpr T k0 = T(0.7978845608028654);  // sqrt(2 / pi)
  constexpr T k1 = T(0.044715);
  return unary(
      a,
      [](T x) { return T(0.5) * x * (T(1) + std::tanh(k0 * (x + k1 * x * x * x))); },
      [](T x, T) {
        const T t = std::tanh(k0 * (x + k1 * x * x * x));
        return T(0.5) * (T(1) + t) +
               T(0.5) * x * (T(1) - t * t) * k0 * (T(1) + T(3) * k1 * x * x);
      });
}

template <typename T>
Tensor<T> silu(const Tensor<T>& a) {
  return unary(
      a, [](T x) { return x * sigmoid(x); },
      [](T x, T) {
        const T s = sigmoid(x);
        return s * (T(1) + x * (T(1) - s));
      });
}

template <typename T>
Tensor<T> softplus(const Tensor<T>& a) {
  return unary(
      a,
      [](T x) { return x > T(20) ? x : std::log1p(std::exp(x)); },
      [](T x, T) { return sigmoid(x); });
}

TSANET_INSTANTIATE_BINARY(add)
TSANET_INSTANTIATE_BINARY(sub)
TSANET_INSTANTIATE_BINARY(mul)
TSANET_INSTANTIATE_UNARY(exp)
TSANET_INSTANTIATE_UNARY(relu)
TSANET_INSTANTIATE_UNARY(gelu)
TSANET_INSTANTIATE_UNARY(silu)
TSANET_INSTANTIATE_UNARY(softplus)
template Tensor<float> scale(const Tensor<float>&, float);
template Tensor<double> scale(const Tensor<double>&, double);
template Tensor<float> add_scalar(const Tensor<float>&, float);
template Tensor<double> add_scalar(const Tensor<double>&, double);

}  // namespace tsanet::ops
