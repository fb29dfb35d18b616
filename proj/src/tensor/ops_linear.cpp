// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include "ops_util.hpp"
#include "tsanet/parallel.hpp"

namespace tsanet::ops {

using detail::grad_of;
using detail::require_rank;

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias) {
  require_rank("linear", w, 2);
  const std::int64_t k_dim = w.dim(0), n_dim = w.dim(1);
  if (x.rank() < 1 || x.dim(-1) != k_dim) throw ShapeError("linear", x.shape(), w.shape());
  const bool has_bias = bias.defined();
  if (has_bias && bias.shape() != Shape{n_dim}) {
    throw ShapeError("linear", bias.shape(), Shape{n_dim}, "bias");
  }
  const std::int64_t rows = x.numel() / std::max<std::int64_t>(k_dim, 1);
  Shape out_shape = x.shape();
  out_shape.back() = n_dim;
  std::vector<T> out(static_cast<std::size_t>(rows * n_dim));
  const T* xd = x.data().data();
  const T* wd = w.data().data();
  const T* bd = has_bias ? bias.data().data() : nullptr;
  parallel_for(rows, 64, [&](std::int64_t r0, std::int64_t r1) {
    for (std::int64_t r = r0; r < r1; ++r) {
      T* __restrict o = out.data() + r * n_dim;
      if (bd) {
        for (std::int64_t n = 0; n < n_dim; ++n) o[n] = bd[n];
      } else {
        for (std::int64_t n = 0; n < n_dim; ++n) o[n] = T(0);
      }
      const T* __restrict xr = xd + r * k_dim;
      for (std::int64_t k = 0; k < k_dim; ++k) {
        const T xv = xr[k];
        const T* __restrict wr = wd + k * n_dim;
        for (std::int64_t n = 0; n < n_dim; ++n) o[n] += xv * wr[n];
      }
    }
  });
  count_macs(rows * k_dim * n_dim);

  std::vector<const Tensor<T>*> inputs{&x, &w};
  if (has_bias) inputs.push_back(&bias);
  return make_result<T>(inputs, std::move(out_shape), std::move(out),
                        [rows, k_dim, n_dim, has_bias](detail::Node<T>& self) {
    const T* g = self.grad.data();
    const auto& px = self.parents[0];
    const auto& pw = self.parents[1];
    const T* xd = px->data.data();
    const T* wd = pw->data.data();
    if (T* gx = grad_of(px)) {
      // gx = g @ w^T, with w^T materialized so the inner loop is a
      // contiguous axpy rather than a serial reduction.
      std::vector<T> wt(static_cast<std::size_t>(k_dim * n_dim));
      for (std::int64_t k = 0; k < k_dim; ++k)
        for (std::int64_t n = 0; n < n_dim; ++n) wt[n * k_dim + k] = wd[k * n_dim + n];
      parallel_for(rows, 64, [&](std::int64_t r0, std::int64_t r1) {
        for (std::int64_t r = r0; r < r1; ++r) {
          const T* __restrict gr = g + r * n_dim;
          T* __restrict gxr = gx + r * k_dim;
          for (std::int64_t n = 0; n < n_dim; ++n) {
            const T gv = gr[n];
            const T* __restrict wtn = wt.data() + n * k_dim;
            for (std::int64_t k = 0; k < k_dim; ++k) gxr[k] += gv * wtn[k];
          }
        }
      });
    }
    if (T* gw = grad_of(pw)) {
      parallel_for(k_dim, 1, [&](std::int64_t k0, std::int64_t k1) {
        for (std::int64_t r = 0; r < rows; ++r) {
          const T* __restrict gr = g + r * n_dim;
          const T* __restrict xr = xd + r * k_dim;
          for (std::int64_t k = k0; k < k1; ++k) {
            const T xv = xr[k];
            T* __restrict gwr = gw + k * n_dim;
            for (std::int64_t n = 0; n < n_dim; ++n) gwr[n] += xv * gr[n];
          }
        }
      });
    }
    if (has_bias) {
      if (T* gb = grad_of(self.parents[2])) {
        for (std::int64_t r = 0; r < rows; ++r) {
          const T* gr = g + r * n_dim;
          for (std::int64_t n = 0; n < n_dim; ++n) gb[n] += gr[n];
        }
      }
    }
  });
}

template <typename T>
Tensor<T> bmm(const Tensor<T>& a, const Tensor<T>& b, bool transpose_b) {
  require_rank("bmm", a, 3);
  require_rank("bmm", b, 3);
  const std::int64_t groups = a.dim(0), m_dim = a.dim(1), k_dim = a.dim(2);
  const std::int64_t n_dim = transpose_b ? b.dim(1) : b.dim(2);
  const std::int64_t bk = transpose_b ? b.dim(2) : b.dim(1);
  if (b.dim(0) != groups || bk != k_dim) throw ShapeError("bmm", a.shape(), b.shape());

  std::vector<T> out(static_cast<std::size_t>(groups * m_dim * n_dim), T(0));
  const T* ad = a.data().data();
  const T* bd = b.data().data();
  parallel_for(groups, 4, [&](std::int64_t g0, std::int64_t g1) {
    for (std::int64_t g = g0; g < g1; ++g) {
      const T* ag = ad + g * m_dim * k_dim;
      const T* bg = bd + g * k_dim * n_dim;
      T* og = out.data() + g * m_dim * n_dim;
      for (std::int64_t i = 0; i < m_dim; ++i) {
        T* orow = og + i * n_dim;
        const T* arow = ag + i * k_dim;
        if (transpose_b) {
          for (std::int64_t j = 0; j < n_dim; ++j) {
            const T* brow = bg + j * k_dim;
            T acc = T(0);
            for (std::int64_t k = 0; k < k_dim; ++k) acc += arow[k] * brow[k];
            orow[j] = acc;
          }
        } else {
          for (std::int64_t k = 0; k < k_dim; ++k) {
            const T av = arow[k];
            const T* brow = bg + k * n_dim;
            for (std::int64_t j = 0; j < n_dim; ++j) orow[j] += av * brow[j];
          }
        }
      }
    }
  });
  count_macs(groups * m_dim * k_dim * n_dim);

  return make_result<T>({&a, &b}, Shape{groups, m_dim, n_dim}, std::move(out),
                        [groups, m_dim, k_dim, n_dim, transpose_b](detail::Node<T>& self) {
    const T* g = self.grad.data();
    const auto& pa = self.parents[0];
    const auto& pb = self.parents[1];
    const T* ad = pa->data.data();
    const T* bd = pb->data.data();
    T* ga = grad_of(pa);
    T* gb = grad_of(pb);
    parallel_for(groups, 4, [&](std::int64_t g0, std::int64_t g1) {
      for (std::int64_t gi = g0; gi < g1; ++gi) {
        const T* gg = g + gi * m_dim * n_dim;
        const T* ag = ad + gi * m_dim * k_dim;
        const T* bg = bd + gi * k_dim * n_dim;
        for (std::int64_t i = 0; i < m_dim; ++i) {
          const T* grow = gg + i * n_dim;
          const T* arow = ag + i * k_dim;
          if (transpose_b) {
            // out[i, j] = sum_k a[i, k] b[j, k]
            for (std::int64_t j = 0; j < n_dim; ++j) {
              const T gv = grow[j];
              if (ga) {
                T* garow = ga + gi * m_dim * k_dim + i * k_dim;
                const T* brow = bg + j * k_dim;
                for (std::int64_t k = 0; k < k_dim; ++k) garow[k] += gv * brow[k];
              }
              if (gb) {
                T* gbrow = gb + gi * k_dim * n_dim + j * k_dim;
                for (std::int64_t k = 0; k < k_dim; ++k) gbrow[k] += gv * arow[k];
              }
            }
          } else {
            // out[i, j] = sum_k a[i, k] b[k, j]
            for (std::int64_t k = 0; k < k_dim; ++k) {
              const T* brow = bg + k * n_dim;
              if (ga) {
                T acc = T(0);
                for (std::int64_t j = 0; j < n_dim; ++j) acc += grow[j] * brow[j];
                ga[gi * m_dim * k_dim + i * k_dim + k] += acc;
              }
              if (gb) {
                const T av = arow[k];
                T* gbrow = gb + gi * k_dim * n_dim + k * n_dim;
                for (std::int64_t j = 0; j < n_dim; ++j) gbrow[j] += av * grow[j];
              }
            }
          }
        }
      }
    });
  });
}

namespace {

// Shared spatial loop for 3x3 zero-padded convolutions. Calls
// body(out_index_base, in_index_base, tap) for every valid (output, tap)
// pair, where bases index the channel vectors.
template <typename F>
void for_each_tap(std::int64_t batch, std::int64_t height, std::int64_t width, std::int64_t cin,
                  std::int64_t cout, F&& body) {
  for (std::int64_t b = 0; b < batch; ++b) {
    for (std::int64_t y = 0; y < height; ++y) {
      for (std::int64_t x = 0; x < width; ++x) {
        const std::int64_t out_base = ((b * height + y) * width + x) * cout;
        for (std::int64_t ky = 0; ky < 3; ++ky) {
          const std::int64_t yy = y + ky - 1;
          if (yy < 0 || yy >= height) continue;
          for (std::int64_t kx = 0; kx < 3; ++kx) {
            const std::int64_t xx = x + kx - 1;
            if (xx < 0 || xx >= width) continue;
            body(out_base, ((b * height + yy) * width + xx) * cin, ky * 3 + kx);
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
Tensor<T> conv3x3(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias) {
  require_rank("conv3x3", x, 4);
  require_rank("conv3x3", w, 4);
  const std::int64_t batch = x.dim(0), height = x.dim(1), width = x.dim(2), cin = x.dim(3);
  if (w.dim(0) != 3 || w.dim(1) != 3 || w.dim(2) != cin) {
    throw ShapeError("conv3x3", x.shape(), w.shape());
  }
  const std::int64_t cout = w.dim(3);
  const bool has_bias = bias.defined();
  if (has_bias && bias.shape() != Shape{cout}) {
    throw ShapeError("conv3x3", bias.shape(), Shape{cout}, "bias");
  }
  const std::int64_t pixels = batch * height * width;
  std::vector<T> out(static_cast<std::size_t>(pixels * cout), T(0));
  if (has_bias) {
    const T* bd = bias.data().data();
    for (std::int64_t p = 0; p < pixels; ++p)
      for (std::int64_t c = 0; c < cout; ++c) out[p * cout + c] = bd[c];
  }
  const T* xd = x.data().data();
  const T* wd = w.data().data();
  for_each_tap(batch, height, width, cin, cout,
               [&](std::int64_t ob, std::int64_t ib, std::int64_t tap) {
                 T* o = out.data() + ob;
                 const T* wt = wd + tap * cin * cout;
                 for (std::int64_t ci = 0; ci < cin; ++ci) {
                   const T xv = xd[ib + ci];
                   const T* wr = wt + ci * cout;
                   for (std::int64_t co = 0; co < cout; ++co) o[co] += xv * wr[co];
                 }
               });
  count_macs(pixels * 9 * cin * cout);

  std::vector<const Tensor<T>*> inputs{&x, &w};
  if (has_bias) inputs.push_back(&bias);
  return make_result<T>(inputs, Shape{batch, height, width, cout}, std::move(out),
                        [=](detail::Node<T>& self) {
    const T* g = self.grad.data();
    const auto& px = self.parents[0];
    const auto& pw = self.parents[1];
    const T* xd = px->data.data();
    const T* wd = pw->data.data();
    T* gx = grad_of(px);
    T* gw = grad_of(pw);
    for_each_tap(batch, height, width, cin, cout,
                 [&](std::int64_t ob, std::int64_t ib, std::int64_t tap) {
                   const T* go = g + ob;
                   const T* wt = wd + tap * cin * cout;
                   for (std::int64_t ci = 0; ci < cin; ++ci) {
                     const T* wr = wt + ci * cout;
                     if (gx) {
                       T acc = T(0);
                       for (std::int64_t co = 0; co < cout; ++co) acc += go[co] * wr[co];
                       gx[ib + ci] += acc;
                     }
                     if (gw) {
                       const T xv = xd[ib + ci];
                       T* gwr = gw + tap * cin * cout + ci * cout;
                       for (std::int64_t co = 0; co < cout; ++co) gwr[co] += xv * go[co];
                     }
                   }
                 });
    if (has_bias) {
      if (T* gb = grad_of(self.parents[2])) {
        for (std::int64_t p = 0; p < pixels; ++p)
          for (std::int64_t c = 0; c < cout; ++c) gb[c] += g[p * cout + c];
      }
    }
  });
}

template <typename T>
Tensor<T> dwconv3x3(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias) {
  require_rank("dwconv3x3", x, 4);
  require_rank("dwconv3x3", w, 3);
  const std::int64_t batch = x.dim(0), height = x.dim(1), width = x.dim(2), ch = x.dim(3);
  if (w.dim(0) != 3 || w.dim(1) != 3 || w.dim(2) != ch) {
    throw ShapeError("dwconv3x3", x.shape(), w.shape());
  }
  const bool has_bias = bias.defined();
  if (has_bias && bias.shape() != Shape{ch}) {
    throw ShapeError("dwconv3x3", bias.shape(), Shape{ch}, "bias");
  }
  const std::int64_t pixels = batch * height * width;
  std::vector<T> out(static_cast<std::size_t>(pixels * ch), T(0));
  if (has_bias) {
    const T* bd = bias.data().data();
    for (std::int64_t p = 0; p < pixels; ++p)
      for (std::int64_t c = 0; c < ch; ++c) out[p * ch + c] = bd[c];
  }
  const T* xd = x.data().data();
  const T* wd = w.data().data();
  for_each_tap(batch, height, width, ch, ch,
               [&](std::int64_t ob, std::int64_t ib, std::int64_t tap) {
                 T* o = out.data() + ob;
                 const T* wt = wd + tap * ch;
                 const T* xv = xd + ib;
                 for (std::int64_t c = 0; c < ch; ++c) o[c] += xv[c] * wt[c];
               });
  count_macs(pixels * 9 * ch);

  std::vector<const Tensor<T>*> inputs{&x, &w};
  if (has_bias) inputs.push_back(&bias);
  return make_result<T>(inputs, Shape{batch, height, width, ch}, std::move(out),
                        [=](detail::Node<T>& self) {
    const T* g = self.grad.data();
    const auto& px = self.parents[0];
    const auto& pw = self.parents[1];
    const T* xd = px->data.data();
    const T* wd = pw->data.data();
    T* gx = grad_of(px);
    T* gw = grad_of(pw);
    for_each_tap(batch, height, width, ch, ch,
                 [&](std::int64_t ob, std::int64_t ib, std::int64_t tap) {
                   const T* go = g + ob;
                   const T* wt = wd + tap * ch;
                   if (gx) {
                     for (std::int64_t c = 0; c < ch; ++c) gx[ib + c] += go[c] * wt[c];
                   }
                   if (gw) {
                     T* gwt = gw + tap * ch;
                     for (std::int64_t c = 0; c < ch; ++c) gwt[c] += go[c] * xd[ib + c];
                   }
                 });
    if (has_bias) {
      if (T* gb = grad_of(self.parents[2])) {
        for (std::int64_t p = 0; p < pixels; ++p)
          for (std::int64_t c = 0; c < ch; ++c) gb[c] += g[p * ch + c];
      }
    }
  });
}

template Tensor<float> linear(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&);
template Tensor<double> linear(const Tensor<double>&, const Tensor<double>&,
                               const Tensor<double>&);
template Tensor<float> bmm(const Tensor<float>&, const Tensor<float>&, bool);
template Tensor<double> bmm(const Tensor<double>&, const Tensor<double>&, bool);
template Tensor<float> conv3x3(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&);
template Tensor<double> conv3x3(const Tensor<double>&, const Tensor<double>&,
                                const Tensor<double>&);
template Tensor<float> dwconv3x3(const Tensor<float>&, const Tensor<float>&,
                                 const Tensor<float>&);
template Tensor<double> dwconv3x3(const Tensor<double>&, const Tensor<double>&,
                                  const Tensor<double>&);

}  // namespace tsanet::ops
