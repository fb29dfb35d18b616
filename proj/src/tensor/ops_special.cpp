// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>

#include "ops_util.hpp"

namespace tsanet::ops {

using detail::grad_of;
using detail::require_rank;

template <typename T>
Tensor<T> fourier_features(const Tensor<T>& p, int frequencies) {
  if (frequencies < 1) throw ValueError("fourier_features: frequency count must be >= 1");
  const std::int64_t c = p.dim(-1);
  const std::int64_t rows = p.numel() / std::max<std::int64_t>(c, 1);
  const std::int64_t L = frequencies;
  const std::int64_t oc = 2 * L * c;
  const T* pd = p.data().data();
  std::vector<T> out(static_cast<std::size_t>(rows * oc));
  for (std::int64_t r = 0; r < rows; ++r) {
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const T v = pd[r * c + ch];
      T* o = out.data() + r * oc + ch * 2 * L;
      for (std::int64_t l = 0; l < L; ++l) {
        const T w = T(2) * std::numbers::pi_v<T> * std::ldexp(T(1), static_cast<int>(l));
        o[l] = std::sin(w * v);
        o[L + l] = std::cos(w * v);
      }
    }
  }
  Shape out_shape = p.shape();
  out_shape.back() = oc;
  return make_result<T>({&p}, std::move(out_shape), std::move(out),
                        [rows, c, L, oc](detail::Node<T>& self) {
    T* gp = grad_of(self.parents[0]);
    if (!gp) return;
    const T* g = self.grad.data();
    const T* y = self.data.data();
    for (std::int64_t r = 0; r < rows; ++r) {
      for (std::int64_t ch = 0; ch < c; ++ch) {
        const std::int64_t base = r * oc + ch * 2 * L;
        T acc = T(0);
        for (std::int64_t l = 0; l < L; ++l) {
          const T w = T(2) * std::numbers::pi_v<T> * std::ldexp(T(1), static_cast<int>(l));
          acc += w * (g[base + l] * y[base + L + l] - g[base + L + l] * y[base + l]);
        }
        gp[r * c + ch] += acc;
      }
    }
  });
}

template <typename T>
Tensor<T> relative_bias(const Tensor<T>& table, std::int64_t window) {
  require_rank("relative_bias", table, 2);
  const std::int64_t span = 2 * window - 1;
  if (window < 1 || table.dim(0) != span * span) {
    throw ShapeError("relative_bias", table.shape(), Shape{span * span, -1}, "table extent");
  }
  const std::int64_t heads = table.dim(1);
  const std::int64_t area = window * window;
  std::vector<std::int64_t> src(static_cast<std::size_t>(heads * area * area));
  std::size_t k = 0;
  for (std::int64_t h = 0; h < heads; ++h)
    for (std::int64_t i = 0; i < area; ++i)
      for (std::int64_t j = 0; j < area; ++j) {
        const std::int64_t dy = i / window - j / window + window - 1;
        const std::int64_t dx = i % window - j % window + window - 1;
        src[k++] = (dy * span + dx) * heads + h;
      }
  const T* td = table.data().data();
  std::vector<T> out(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) out[i] = td[src[i]];
  return make_result<T>({&table}, Shape{heads, area, area}, std::move(out),
                        [src = std::move(src)](detail::Node<T>& self) {
    T* gt = grad_of(self.parents[0]);
    if (!gt) return;
    for (std::size_t i = 0; i < src.size(); ++i) gt[src[i]] += self.grad[i];
  });
}

namespace {

std::vector<std::int64_t> scan_positions(std::int64_t h, std::int64_t w, ScanOrder order) {
  const std::int64_t n = h * w;
  std::vector<std::int64_t> pos(static_cast<std::size_t>(n));
  for (std::int64_t t = 0; t < n; ++t) {
    switch (order) {
      case ScanOrder::kRowForward: pos[t] = t; break;
      case ScanOrder::kRowBackward: pos[t] = n - 1 - t; break;
      case ScanOrder::kColForward: pos[t] = (t % h) * w + t / h; break;
      case ScanOrder::kColBackward: {
        const std::int64_t s = n - 1 - t;
        pos[t] = (s % h) * w + s / h;
        break;
      }
    }
  }
  return pos;
}

}  // namespace

template <typename T>
Tensor<T> selective_scan(const Tensor<T>& x, const Tensor<T>& delta, const Tensor<T>& a,
                         const Tensor<T>& b, const Tensor<T>& c, const Tensor<T>& skip,
                         ScanOrder order) {
  require_rank("selective_scan", x, 4);
  const std::int64_t batch = x.dim(0), h = x.dim(1), w = x.dim(2), d_dim = x.dim(3);
  if (delta.shape() != x.shape()) throw ShapeError("selective_scan", x.shape(), delta.shape(), "delta");
  require_rank("selective_scan", a, 2);
  if (a.dim(0) != d_dim) throw ShapeError("selective_scan", x.shape(), a.shape(), "state matrix");
  const std::int64_t n_dim = a.dim(1);
  const Shape bc_shape{batch, h, w, n_dim};
  if (b.shape() != bc_shape) throw ShapeError("selective_scan", bc_shape, b.shape(), "input matrix");
  if (c.shape() != bc_shape) throw ShapeError("selective_scan", bc_shape, c.shape(), "output matrix");
  if (skip.shape() != Shape{d_dim}) throw ShapeError("selective_scan", Shape{d_dim}, skip.shape(), "skip");
  for (T v : delta.data()) {
    if (!(v > T(0))) throw ValueError("selective_scan: step size must be strictly positive");
  }

  const std::int64_t len = h * w;
  const auto pos = std::make_shared<std::vector<std::int64_t>>(scan_positions(h, w, order));
  const T* xd = x.data().data();
  const T* dd = delta.data().data();
  const T* ad = a.data().data();
  const T* bd = b.data().data();
  const T* cd = c.data().data();
  const T* sd = skip.data().data();
  const std::int64_t dn = d_dim * n_dim;
  // Hidden states and decay factors for every (batch, step), kept for the
  // reverse pass.
  auto states = std::make_shared<std::vector<T>>(static_cast<std::size_t>(batch * len * dn));
  auto decays = std::make_shared<std::vector<T>>(static_cast<std::size_t>(batch * len * dn));
  std::vector<T> out(static_cast<std::size_t>(x.numel()));
  for (std::int64_t bi = 0; bi < batch; ++bi) {
    for (std::int64_t t = 0; t < len; ++t) {
      const std::int64_t p = bi * len + (*pos)[t];
      const T* __restrict bp = bd + p * n_dim;
      const T* __restrict cp = cd + p * n_dim;
      T* __restrict hs = states->data() + (bi * len + t) * dn;
      T* __restrict es = decays->data() + (bi * len + t) * dn;
      const T* __restrict hp = t > 0 ? hs - dn : nullptr;
      for (std::int64_t d = 0; d < d_dim; ++d) {
        const T xv = xd[p * d_dim + d];
        const T dl = dd[p * d_dim + d];
        const T* __restrict ar = ad + d * n_dim;
        T* __restrict hr = hs + d * n_dim;
        T* __restrict er = es + d * n_dim;
        for (std::int64_t n = 0; n < n_dim; ++n) er[n] = std::exp(dl * ar[n]);
        T y = sd[d] * xv;
        for (std::int64_t n = 0; n < n_dim; ++n) {
          const T prev = hp ? hp[d * n_dim + n] : T(0);
          hr[n] = er[n] * prev + dl * bp[n] * xv;
          y += cp[n] * hr[n];
        }
        out[p * d_dim + d] = y;
      }
    }
  }
  count_macs(batch * len * (3 * dn + d_dim));

  return make_result<T>({&x, &delta, &a, &b, &c, &skip}, x.shape(), std::move(out),
                        [=](detail::Node<T>& self) {
    const auto& P = self.parents;
    const T* g = self.grad.data();
    const T* xd = P[0]->data.data();
    const T* dd = P[1]->data.data();
    const T* ad = P[2]->data.data();
    const T* bd = P[3]->data.data();
    const T* cd = P[4]->data.data();
    const T* sd = P[5]->data.data();
    T* gx = grad_of(P[0]);
    T* gdelta = grad_of(P[1]);
    T* ga = grad_of(P[2]);
    T* gb = grad_of(P[3]);
    T* gc = grad_of(P[4]);
    T* gskip = grad_of(P[5]);
    std::vector<T> gh(static_cast<std::size_t>(dn));
    // Scratch accumulators so the inner loop is branch-free; the optional
    // outputs are flushed once per step.
    std::vector<T> gc_row(static_cast<std::size_t>(n_dim)), gb_row(static_cast<std::size_t>(n_dim));
    std::vector<T> ga_acc(static_cast<std::size_t>(dn), T(0));
    for (std::int64_t bi = 0; bi < batch; ++bi) {
      std::fill(gh.begin(), gh.end(), T(0));
      for (std::int64_t t = len - 1; t >= 0; --t) {
        const std::int64_t p = bi * len + (*pos)[t];
        const T* __restrict bp = bd + p * n_dim;
        const T* __restrict cp = cd + p * n_dim;
        const T* __restrict hs = states->data() + (bi * len + t) * dn;
        const T* __restrict es = decays->data() + (bi * len + t) * dn;
        const T* __restrict hprev = t > 0 ? hs - dn : nullptr;
        std::fill(gc_row.begin(), gc_row.end(), T(0));
        std::fill(gb_row.begin(), gb_row.end(), T(0));
        for (std::int64_t d = 0; d < d_dim; ++d) {
          const T gy = g[p * d_dim + d];
          const T xv = xd[p * d_dim + d];
          const T dl = dd[p * d_dim + d];
          const T* __restrict ar = ad + d * n_dim;
          const T* __restrict er = es + d * n_dim;
          const T* __restrict hr = hs + d * n_dim;
          T* __restrict ghr = gh.data() + d * n_dim;
          T* __restrict gar = ga_acc.data() + d * n_dim;
          T gx_acc = gy * sd[d];
          T gdl = T(0);
          if (gskip) gskip[d] += gy * xv;
          for (std::int64_t n = 0; n < n_dim; ++n) {
            const T h_prev = hprev ? hprev[d * n_dim + n] : T(0);
            const T ghn = ghr[n] + gy * cp[n];
            const T g_decay = ghn * h_prev * er[n];
            gc_row[n] += gy * hr[n];
            gdl += g_decay * ar[n] + ghn * bp[n] * xv;
            gar[n] += g_decay * dl;
            gb_row[n] += ghn * dl * xv;
            gx_acc += ghn * dl * bp[n];
            ghr[n] = ghn * er[n];
          }
          if (gx) gx[p * d_dim + d] += gx_acc;
          if (gdelta) gdelta[p * d_dim + d] += gdl;
        }
        if (gc)
          for (std::int64_t n = 0; n < n_dim; ++n) gc[p * n_dim + n] += gc_row[n];
        if (gb)
          for (std::int64_t n = 0; n < n_dim; ++n) gb[p * n_dim + n] += gb_row[n];
      }
    }
    if (ga)
      for (std::int64_t i = 0; i < dn; ++i) ga[i] += ga_acc[i];
  });
}

template Tensor<float> fourier_features(const Tensor<float>&, int);
template Tensor<double> fourier_features(const Tensor<double>&, int);
template Tensor<float> relative_bias(const Tensor<float>&, std::int64_t);
template Tensor<double> relative_bias(const Tensor<double>&, std::int64_t);
template Tensor<float> selective_scan(const Tensor<float>&, const Tensor<float>&,
                                      const Tensor<float>&, const Tensor<float>&,
                                      const Tensor<float>&, const Tensor<float>&, ScanOrder);
template Tensor<double> selective_scan(const Tensor<double>&, const Tensor<double>&,
                                       const Tensor<double>&, const Tensor<double>&,
                                       const Tensor<double>&, const Tensor<double>&, ScanOrder);

}  // namespace tsanet::ops
