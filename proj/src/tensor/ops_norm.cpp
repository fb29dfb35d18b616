// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "ops_util.hpp"

namespace tsanet::ops {

using detail::grad_of;

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias,
                     double eps) {
  const std::int64_t c = x.dim(-1);
  if (gain.shape() != Shape{c} || bias.shape() != Shape{c}) {
    throw ShapeError("layer_norm", x.shape(), gain.shape(), "affine parameters");
  }
  const std::int64_t rows = x.numel() / c;
  const T* xd = x.data().data();
  const T* gd = gain.data().data();
  const T* bd = bias.data().data();
  auto xhat = std::make_shared<std::vector<T>>(static_cast<std::size_t>(x.numel()));
  auto rstd = std::make_shared<std::vector<T>>(static_cast<std::size_t>(rows));
  std::vector<T> out(static_cast<std::size_t>(x.numel()));
  for (std::int64_t r = 0; r < rows; ++r) {
    const T* xr = xd + r * c;
    T mu = T(0);
    for (std::int64_t j = 0; j < c; ++j) mu += xr[j];
    mu /= T(c);
    T var = T(0);
    for (std::int64_t j = 0; j < c; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= T(c);
    const T rs = T(1) / std::sqrt(var + T(eps));
    (*rstd)[r] = rs;
    T* hr = xhat->data() + r * c;
    T* orow = out.data() + r * c;
    for (std::int64_t j = 0; j < c; ++j) {
      hr[j] = (xr[j] - mu) * rs;
      orow[j] = hr[j] * gd[j] + bd[j];
    }
  }
  return make_result<T>({&x, &gain, &bias}, x.shape(), std::move(out),
                        [xhat, rstd, rows, c](detail::Node<T>& self) {
    const T* g = self.grad.data();
    const T* gd = self.parents[1]->data.data();
    const T* hd = xhat->data();
    if (T* gx = grad_of(self.parents[0])) {
      for (std::int64_t r = 0; r < rows; ++r) {
        const T* gr = g + r * c;
        const T* hr = hd + r * c;
        T mean_gh = T(0), mean_ghh = T(0);
        for (std::int64_t j = 0; j < c; ++j) {
          const T gh = gr[j] * gd[j];
          mean_gh += gh;
          mean_ghh += gh * hr[j];
        }
        mean_gh /= T(c);
        mean_ghh /= T(c);
        const T rs = (*rstd)[r];
        T* gxr = gx + r * c;
        for (std::int64_t j = 0; j < c; ++j) {
          gxr[j] += rs * (gr[j] * gd[j] - mean_gh - hr[j] * mean_ghh);
        }
      }
    }
    T* gg = grad_of(self.parents[1]);
    T* gb = grad_of(self.parents[2]);
    if (gg || gb) {
      for (std::int64_t r = 0; r < rows; ++r) {
        const T* gr = g + r * c;
        const T* hr = hd + r * c;
        for (std::int64_t j = 0; j < c; ++j) {
          if (gg) gg[j] += gr[j] * hr[j];
          if (gb) gb[j] += gr[j];
        }
      }
    }
  });
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x) {
  const std::int64_t c = x.dim(-1);
  const std::int64_t rows = x.numel() / c;
  const T* xd = x.data().data();
  std::vector<T> out(static_cast<std::size_t>(x.numel()));
  for (std::int64_t r = 0; r < rows; ++r) {
    const T* xr = xd + r * c;
    T* orow = out.data() + r * c;
    T mx = xr[0];
    for (std::int64_t j = 1; j < c; ++j) mx = std::max(mx, xr[j]);
    T s = T(0);
    for (std::int64_t j = 0; j < c; ++j) {
      orow[j] = std::exp(xr[j] - mx);
      s += orow[j];
    }
    const T inv = T(1) / s;
    for (std::int64_t j = 0; j < c; ++j) orow[j] *= inv;
  }
  return make_result<T>({&x}, x.shape(), std::move(out), [rows, c](detail::Node<T>& self) {
    T* gx = grad_of(self.parents[0]);
    if (!gx) return;
    const T* g = self.grad.data();
    const T* y = self.data.data();
    for (std::int64_t r = 0; r < rows; ++r) {
      const T* gr = g + r * c;
      const T* yr = y + r * c;
      T dot = T(0);
      for (std::int64_t j = 0; j < c; ++j) dot += gr[j] * yr[j];
      T* gxr = gx + r * c;
      for (std::int64_t j = 0; j < c; ++j) gxr[j] += yr[j] * (gr[j] - dot);
    }
  });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T s = T(0);
  for (T v : x.data()) s += v;
  return make_result<T>({&x}, Shape{}, std::vector<T>{s}, [](detail::Node<T>& self) {
    T* gx = grad_of(self.parents[0]);
    if (!gx) return;
    const T g = self.grad[0];
    const std::size_t n = self.parents[0]->data.size();
    for (std::size_t i = 0; i < n; ++i) gx[i] += g;
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  if (x.numel() == 0) throw ShapeError("mean", x.shape(), Shape{}, "empty tensor");
  return scale(sum(x), T(1) / T(x.numel()));
}

template <typename T>
Tensor<T> charbonnier(const Tensor<T>& pred, const Tensor<T>& target, double eps) {
  if (pred.shape() != target.shape()) throw ShapeError("charbonnier", pred.shape(), target.shape());
  const std::int64_t n = pred.numel();
  if (n == 0) throw ShapeError("charbonnier", pred.shape(), target.shape(), "empty tensor");
  const T* pd = pred.data().data();
  const T* td = target.data().data();
  const T eps2 = T(eps) * T(eps);
  double acc = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const T d = pd[i] - td[i];
    acc += static_cast<double>(std::sqrt(d * d + eps2));
  }
  const T value = static_cast<T>(acc / static_cast<double>(n));
  return make_result<T>({&pred, &target}, Shape{}, std::vector<T>{value},
                        [n, eps2](detail::Node<T>& self) {
    const T g = self.grad[0] / T(n);
    const T* pd = self.parents[0]->data.data();
    const T* td = self.parents[1]->data.data();
    T* gp = grad_of(self.parents[0]);
    T* gt = grad_of(self.parents[1]);
    for (std::int64_t i = 0; i < n; ++i) {
      const T d = pd[i] - td[i];
      const T dv = g * d / std::sqrt(d * d + eps2);
      if (gp) gp[i] += dv;
      if (gt) gt[i] -= dv;
    }
  });
}

template Tensor<float> layer_norm(const Tensor<float>&, const Tensor<float>&,
                                  const Tensor<float>&, double);
template Tensor<double> layer_norm(const Tensor<double>&, const Tensor<double>&,
                                   const Tensor<double>&, double);
TSANET_INSTANTIATE_UNARY(softmax)
TSANET_INSTANTIATE_UNARY(sum)
TSANET_INSTANTIATE_UNARY(mean)
template Tensor<float> charbonnier(const Tensor<float>&, const Tensor<float>&, double);
template Tensor<double> charbonnier(const Tensor<double>&, const Tensor<double>&, double);

}  // namespace tsanet::ops
