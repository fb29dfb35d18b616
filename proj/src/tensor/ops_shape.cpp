// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include <numeric>

#include "ops_util.hpp"

namespace tsanet::ops {

using detail::grad_of;
using detail::require_rank;

namespace {

// out[i] = x[src[i]], or 0 where src[i] < 0. Covers every data-movement op.
template <typename T>
Tensor<T> gather(const Tensor<T>& x, Shape out_shape, std::vector<std::int64_t> src) {
  const T* xd = x.data().data();
  std::vector<T> out(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) out[i] = src[i] >= 0 ? xd[src[i]] : T(0);
  return make_result<T>({&x}, std::move(out_shape), std::move(out),
                        [src = std::move(src)](detail::Node<T>& self) {
    T* gx = grad_of(self.parents[0]);
    if (!gx) return;
    const T* g = self.grad.data();
    for (std::size_t i = 0; i < src.size(); ++i) {
      if (src[i] >= 0) gx[src[i]] += g[i];
    }
  });
}

std::int64_t reflect_index(std::int64_t i, std::int64_t n) {
  if (n == 1) return 0;
  const std::int64_t period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

std::int64_t wrap(std::int64_t i, std::int64_t n) {
  i %= n;
  return i < 0 ? i + n : i;
}

}  // namespace

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, const Shape& shape) {
  if (numel_of(shape) != x.numel()) throw ShapeError("reshape", x.shape(), shape);
  std::vector<T> out(x.data().begin(), x.data().end());
  return make_result<T>({&x}, shape, std::move(out), [](detail::Node<T>& self) {
    T* gx = grad_of(self.parents[0]);
    if (!gx) return;
    for (std::size_t i = 0; i < self.grad.size(); ++i) gx[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> permute(const Tensor<T>& x, const std::vector<int>& perm) {
  const auto rank = static_cast<std::size_t>(x.rank());
  std::vector<int> check(perm);
  std::sort(check.begin(), check.end());
  std::vector<int> iota(rank);
  std::iota(iota.begin(), iota.end(), 0);
  if (perm.size() != rank || check != iota) {
    throw ShapeError("permute", x.shape(), Shape(perm.begin(), perm.end()), "invalid permutation");
  }
  const Shape& in = x.shape();
  Shape out_shape(rank);
  std::vector<std::int64_t> in_stride(rank, 1);
  for (std::size_t i = rank; i-- > 1;) in_stride[i - 1] = in_stride[i] * in[i];
  std::vector<std::int64_t> stride(rank);  // input stride of each output axis
  for (std::size_t i = 0; i < rank; ++i) {
    out_shape[i] = in[static_cast<std::size_t>(perm[i])];
    stride[i] = in_stride[static_cast<std::size_t>(perm[i])];
  }
  const std::int64_t n = x.numel();
  std::vector<std::int64_t> src(static_cast<std::size_t>(n));
  std::vector<std::int64_t> idx(rank, 0);
  std::int64_t offset = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    src[i] = offset;
    for (std::size_t ax = rank; ax-- > 0;) {
      if (++idx[ax] < out_shape[ax]) {
        offset += stride[ax];
        break;
      }
      offset -= stride[ax] * (out_shape[ax] - 1);
      idx[ax] = 0;
    }
  }
  return gather(x, std::move(out_shape), std::move(src));
}

template <typename T>
Tensor<T> pad(const Tensor<T>& x, std::int64_t top, std::int64_t bottom, std::int64_t left,
              std::int64_t right, PadMode mode) {
  require_rank("pad", x, 4);
  const std::int64_t batch = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  if (top < 0 || bottom < 0 || left < 0 || right < 0) {
    throw ShapeError("pad", x.shape(), Shape{top, bottom, left, right}, "negative padding");
  }
  if (mode == PadMode::kReflect && (top >= h || bottom >= h || left >= w || right >= w)) {
    throw ShapeError("pad", x.shape(), Shape{top, bottom, left, right},
                     "reflect padding must be smaller than the extent");
  }
  const std::int64_t oh = h + top + bottom, ow = w + left + right;
  std::vector<std::int64_t> src(static_cast<std::size_t>(batch * oh * ow * c));
  std::size_t i = 0;
  for (std::int64_t b = 0; b < batch; ++b) {
    for (std::int64_t y = 0; y < oh; ++y) {
      for (std::int64_t xx = 0; xx < ow; ++xx) {
        std::int64_t sy = y - top, sx = xx - left;
        bool inside = sy >= 0 && sy < h && sx >= 0 && sx < w;
        if (!inside && mode == PadMode::kReflect) {
          sy = reflect_index(sy, h);
          sx = reflect_index(sx, w);
          inside = true;
        }
        for (std::int64_t ch = 0; ch < c; ++ch) {
          src[i++] = inside ? ((b * h + sy) * w + sx) * c + ch : -1;
        }
      }
    }
  }
  return gather(x, Shape{batch, oh, ow, c}, std::move(src));
}

template <typename T>
Tensor<T> crop(const Tensor<T>& x, std::int64_t y0, std::int64_t x0, std::int64_t height,
               std::int64_t width) {
  require_rank("crop", x, 4);
  const std::int64_t batch = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  if (y0 < 0 || x0 < 0 || height < 0 || width < 0 || y0 + height > h || x0 + width > w) {
    throw ShapeError("crop", x.shape(), Shape{y0, x0, height, width}, "window out of bounds");
  }
  std::vector<std::int64_t> src(static_cast<std::size_t>(batch * height * width * c));
  std::size_t i = 0;
  for (std::int64_t b = 0; b < batch; ++b)
    for (std::int64_t y = 0; y < height; ++y)
      for (std::int64_t xx = 0; xx < width; ++xx)
        for (std::int64_t ch = 0; ch < c; ++ch)
          src[i++] = ((b * h + y0 + y) * w + x0 + xx) * c + ch;
  return gather(x, Shape{batch, height, width, c}, std::move(src));
}

template <typename T>
Tensor<T> roll(const Tensor<T>& x, std::int64_t dy, std::int64_t dx) {
  require_rank("roll", x, 4);
  const std::int64_t batch = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  std::vector<std::int64_t> src(static_cast<std::size_t>(x.numel()));
  std::size_t i = 0;
  for (std::int64_t b = 0; b < batch; ++b)
    for (std::int64_t y = 0; y < h; ++y)
      for (std::int64_t xx = 0; xx < w; ++xx) {
        const std::int64_t base = ((b * h + wrap(y - dy, h)) * w + wrap(xx - dx, w)) * c;
        for (std::int64_t ch = 0; ch < c; ++ch) src[i++] = base + ch;
      }
  return gather(x, x.shape(), std::move(src));
}

template <typename T>
Tensor<T> pixel_unshuffle(const Tensor<T>& x) {
  require_rank("pixel_unshuffle", x, 4);
  const std::int64_t batch = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  if (h % 2 || w % 2) throw ShapeError("pixel_unshuffle", x.shape(), Shape{2, 2}, "odd extent");
  const std::int64_t oh = h / 2, ow = w / 2;
  std::vector<std::int64_t> src(static_cast<std::size_t>(x.numel()));
  std::size_t i = 0;
  for (std::int64_t b = 0; b < batch; ++b)
    for (std::int64_t y = 0; y < oh; ++y)
      for (std::int64_t xx = 0; xx < ow; ++xx)
        for (std::int64_t sub = 0; sub < 4; ++sub)
          for (std::int64_t ch = 0; ch < c; ++ch)
            src[i++] = ((b * h + 2 * y + sub / 2) * w + 2 * xx + sub % 2) * c + ch;
  return gather(x, Shape{batch, oh, ow, 4 * c}, std::move(src));
}

template <typename T>
Tensor<T> pixel_shuffle(const Tensor<T>& x) {
  require_rank("pixel_shuffle", x, 4);
  const std::int64_t batch = x.dim(0), h = x.dim(1), w = x.dim(2), c4 = x.dim(3);
  if (c4 % 4) throw ShapeError("pixel_shuffle", x.shape(), Shape{4}, "channels not divisible by 4");
  const std::int64_t c = c4 / 4, oh = 2 * h, ow = 2 * w;
  std::vector<std::int64_t> src(static_cast<std::size_t>(x.numel()));
  std::size_t i = 0;
  for (std::int64_t b = 0; b < batch; ++b)
    for (std::int64_t y = 0; y < oh; ++y)
      for (std::int64_t xx = 0; xx < ow; ++xx) {
        const std::int64_t sub = (y % 2) * 2 + xx % 2;
        const std::int64_t base = ((b * h + y / 2) * w + xx / 2) * c4 + sub * c;
        for (std::int64_t ch = 0; ch < c; ++ch) src[i++] = base + ch;
      }
  return gather(x, Shape{batch, oh, ow, c}, std::move(src));
}

template <typename T>
Tensor<T> slice_channels(const Tensor<T>& x, std::int64_t begin, std::int64_t end) {
  const std::int64_t c = x.dim(-1);
  if (begin < 0 || end > c || begin >= end) {
    throw ShapeError("slice_channels", x.shape(), Shape{begin, end}, "bad channel range");
  }
  const std::int64_t rows = x.numel() / c, width = end - begin;
  std::vector<std::int64_t> src(static_cast<std::size_t>(rows * width));
  std::size_t i = 0;
  for (std::int64_t r = 0; r < rows; ++r)
    for (std::int64_t ch = begin; ch < end; ++ch) src[i++] = r * c + ch;
  Shape out_shape = x.shape();
  out_shape.back() = width;
  return gather(x, std::move(out_shape), std::move(src));
}

template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw ValueError("concat_channels: no inputs");
  Shape lead = parts[0].shape();
  lead.pop_back();
  std::vector<std::int64_t> widths;
  std::int64_t total = 0;
  for (const auto& p : parts) {
    Shape pl = p.shape();
    pl.pop_back();
    if (pl != lead) throw ShapeError("concat_channels", parts[0].shape(), p.shape());
    widths.push_back(p.dim(-1));
    total += p.dim(-1);
  }
  const std::int64_t rows = numel_of(lead);
  std::vector<T> out(static_cast<std::size_t>(rows * total));
  std::int64_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const T* pd = parts[k].data().data();
    const std::int64_t wk = widths[k];
    for (std::int64_t r = 0; r < rows; ++r)
      std::copy(pd + r * wk, pd + (r + 1) * wk, out.data() + r * total + offset);
    offset += wk;
  }
  Shape out_shape = lead;
  out_shape.push_back(total);
  std::vector<const Tensor<T>*> inputs;
  for (const auto& p : parts) inputs.push_back(&p);
  return make_result<T>(inputs, std::move(out_shape), std::move(out),
                        [widths, rows, total](detail::Node<T>& self) {
    const T* g = self.grad.data();
    std::int64_t offset = 0;
    for (std::size_t k = 0; k < widths.size(); ++k) {
      const std::int64_t wk = widths[k];
      if (T* gp = grad_of(self.parents[k])) {
        for (std::int64_t r = 0; r < rows; ++r)
          for (std::int64_t j = 0; j < wk; ++j) gp[r * wk + j] += g[r * total + offset + j];
      }
      offset += wk;
    }
  });
}

template Tensor<float> reshape(const Tensor<float>&, const Shape&);
template Tensor<double> reshape(const Tensor<double>&, const Shape&);
template Tensor<float> permute(const Tensor<float>&, const std::vector<int>&);
template Tensor<double> permute(const Tensor<double>&, const std::vector<int>&);
template Tensor<float> pad(const Tensor<float>&, std::int64_t, std::int64_t, std::int64_t,
                           std::int64_t, PadMode);
template Tensor<double> pad(const Tensor<double>&, std::int64_t, std::int64_t, std::int64_t,
                            std::int64_t, PadMode);
template Tensor<float> crop(const Tensor<float>&, std::int64_t, std::int64_t, std::int64_t,
                            std::int64_t);
template Tensor<double> crop(const Tensor<double>&, std::int64_t, std::int64_t, std::int64_t,
                             std::int64_t);
template Tensor<float> roll(const Tensor<float>&, std::int64_t, std::int64_t);
template Tensor<double> roll(const Tensor<double>&, std::int64_t, std::int64_t);
TSANET_INSTANTIATE_UNARY(pixel_unshuffle)
TSANET_INSTANTIATE_UNARY(pixel_shuffle)
template Tensor<float> slice_channels(const Tensor<float>&, std::int64_t, std::int64_t);
template Tensor<double> slice_channels(const Tensor<double>&, std::int64_t, std::int64_t);
template Tensor<float> concat_channels(const std::vector<Tensor<float>>&);
template Tensor<double> concat_channels(const std::vector<Tensor<double>>&);

}  // namespace tsanet::ops
