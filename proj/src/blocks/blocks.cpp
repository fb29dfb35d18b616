// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include "tsanet/blocks.hpp"

#include <cmath>

#include "tsanet/cost.hpp"
#include "tsanet/rng.hpp"

namespace tsanet {

using namespace ops;

template <typename T>
Linear<T>::Linear(ParamStore<T>& store, const std::string& path, std::int64_t in,
                  std::int64_t out, bool with_bias, Init init) {
  weight = store.add(join_path(path, "weight"), {in, out}, init);
  if (with_bias) bias = store.add(join_path(path, "bias"), {out}, Init::kZeros);
}

template <typename T>
Conv3<T>::Conv3(ParamStore<T>& store, const std::string& path, std::int64_t in,
                std::int64_t out, Init init) {
  weight = store.add(join_path(path, "weight"), {3, 3, in, out}, init);
  bias = store.add(join_path(path, "bias"), {out}, Init::kZeros);
}

template <typename T>
LayerNorm<T>::LayerNorm(ParamStore<T>& store, const std::string& path, std::int64_t channels) {
  gain = store.add(join_path(path, "gain"), {channels}, Init::kOnes);
  bias = store.add(join_path(path, "bias"), {channels}, Init::kZeros);
}

// ---- SPA ----

template <typename T>
Spa<T>::Spa(ParamStore<T>& store, const std::string& path, std::int64_t channels,
            std::int64_t pos_channels, bool gated_)
    : gated(gated_) {
  norm_image = LayerNorm<T>(store, join_path(path, "norm_image"), channels);
  proj_image = Linear<T>(store, join_path(path, "proj_image"), channels, channels);
  if (gated) {
    norm_pos = LayerNorm<T>(store, join_path(path, "norm_pos"), pos_channels);
    proj_pos = Linear<T>(store, join_path(path, "proj_pos"), pos_channels, channels);
  }
}

template <typename T>
Tensor<T> Spa<T>::operator()(const Tensor<T>& image, const Tensor<T>& pos) const {
  CostScope scope("spa");
  Tensor<T> branch = proj_image(norm_image(image));
  if (gated) {
    if (pos.rank() != 4 || pos.dim(0) != image.dim(0) || pos.dim(1) != image.dim(1) ||
        pos.dim(2) != image.dim(2)) {
      throw ShapeError("spa", image.shape(), pos.shape(), "spatial extents differ");
    }
    branch = mul(branch, relu(proj_pos(norm_pos(pos))));
  }
  return add(branch, image);
}

// ---- windows ----

template <typename T>
Tensor<T> window_partition(const Tensor<T>& x, std::int64_t m, std::int64_t shift) {
  if (x.rank() != 4 || m <= 0 || x.dim(1) % m || x.dim(2) % m) {
    throw ShapeError("window_partition", x.shape(), Shape{m, m}, "extents not divisible by window");
  }
  const auto b = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  const Tensor<T> shifted = shift ? roll(x, -shift, -shift) : x;
  auto t = reshape(shifted, {b, h / m, m, w / m, m, c});
  t = permute(t, {0, 1, 3, 2, 4, 5});
  return reshape(t, {b * (h / m) * (w / m), m * m, c});
}

template <typename T>
Tensor<T> window_merge(const Tensor<T>& windows, std::int64_t b, std::int64_t h,
                       std::int64_t w, std::int64_t shift) {
  const auto mm = windows.dim(1);
  const auto m = static_cast<std::int64_t>(std::lround(std::sqrt(static_cast<double>(mm))));
  if (windows.rank() != 3 || m * m != mm || h % m || w % m ||
      windows.dim(0) != b * (h / m) * (w / m)) {
    throw ShapeError("window_merge", windows.shape(), Shape{b, h, w}, "window set mismatch");
  }
  const auto c = windows.dim(2);
  auto t = reshape(windows, {b, h / m, w / m, m, m, c});
  t = permute(t, {0, 1, 3, 2, 4, 5});
  t = reshape(t, {b, h, w, c});
  return shift ? roll(t, shift, shift) : t;
}

std::vector<double> seam_mask(std::int64_t h, std::int64_t w, std::int64_t m,
                              std::int64_t shift) {
  const auto nh = h / m, nw = w / m, mm = m * m;
  std::vector<double> mask(static_cast<std::size_t>(nh * nw * mm * mm), 0.0);
  if (shift == 0) return mask;
  // Region id in the shifted frame: rows/cols that wrapped around form
  // their own region.
  auto region = [&](std::int64_t y, std::int64_t x) {
    return (y >= h - shift ? 2 : 0) + (x >= w - shift ? 1 : 0);
  };
  for (std::int64_t wy = 0; wy < nh; ++wy)
    for (std::int64_t wx = 0; wx < nw; ++wx) {
      const auto base = (wy * nw + wx) * mm * mm;
      for (std::int64_t i = 0; i < mm; ++i)
        for (std::int64_t j = 0; j < mm; ++j) {
          const int ri = region(wy * m + i / m, wx * m + i % m);
          const int rj = region(wy * m + j / m, wx * m + j % m);
          if (ri != rj) mask[static_cast<std::size_t>(base + i * mm + j)] = -1e9;
        }
    }
  return mask;
}

// ---- window attention ----

template <typename T>
WindowAttention<T>::WindowAttention(ParamStore<T>& store, const std::string& path,
                                    std::int64_t c, std::int64_t h, std::int64_t m)
    : channels(c), heads(h), window(m) {
  if (h <= 0 || c % h) {
    throw ValueError("window attention: channels " + std::to_string(c) +
                     " not divisible by heads " + std::to_string(h));
  }
  q = Linear<T>(store, join_path(path, "q"), c, c);
  k = Linear<T>(store, join_path(path, "k"), c, c);
  v = Linear<T>(store, join_path(path, "v"), c, c);
  out = Linear<T>(store, join_path(path, "out"), c, c);
  bias_table = store.add(join_path(path, "bias_table"), {(2 * m - 1) * (2 * m - 1), h}, Init::kZeros);
}

template <typename T>
Tensor<T> WindowAttention<T>::operator()(const Tensor<T>& image, const Tensor<T>& query_source,
                                         std::int64_t shift) const {
  CostScope scope("wmca");
  if (image.shape() != query_source.shape()) {
    throw ShapeError("wmca", image.shape(), query_source.shape(), "image/query windows differ");
  }
  const auto b = image.dim(0), h = image.dim(1), w = image.dim(2);
  const auto m = window, mm = m * m, dh = channels / heads;
  const auto nwin = (h / m) * (w / m);
  auto split_heads = [&](const Tensor<T>& t) {
    auto win = window_partition(t, m, shift);  // [G, mm, C]
    win = reshape(win, {b * nwin, mm, heads, dh});
    return reshape(permute(win, {0, 2, 1, 3}), {b * nwin * heads, mm, dh});
  };
  const auto qh = split_heads(q(query_source));
  const auto kh = split_heads(k(image));
  const auto vh = split_heads(v(image));

  auto scores = scale(bmm(qh, kh, true), static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh))));
  scores = reshape(scores, {b * nwin, heads, mm, mm});
  scores = add(scores, relative_bias(bias_table, m));
  if (shift) {
    const auto seam = seam_mask(h, w, m, shift);
    std::vector<T> mask(static_cast<std::size_t>(nwin * heads * mm * mm));
    for (std::int64_t wi = 0; wi < nwin; ++wi)
      for (std::int64_t hi = 0; hi < heads; ++hi)
        for (std::int64_t e = 0; e < mm * mm; ++e)
          mask[static_cast<std::size_t>((wi * heads + hi) * mm * mm + e)] =
              static_cast<T>(seam[static_cast<std::size_t>(wi * mm * mm + e)]);
    scores = reshape(scores, {b, nwin, heads, mm, mm});
    scores = add(scores, Tensor<T>::from_data({nwin, heads, mm, mm}, std::move(mask)));
  }
  const auto attn = reshape(softmax(scores), {b * nwin * heads, mm, mm});
  auto o = bmm(attn, vh);  // [G*heads, mm, dh]
  o = permute(reshape(o, {b * nwin, heads, mm, dh}), {0, 2, 1, 3});
  o = reshape(o, {b * nwin, mm, channels});
  return out(window_merge(o, b, h, w, shift));
}

// ---- QCSA ----

template <typename T>
Mlp<T>::Mlp(ParamStore<T>& store, const std::string& path, std::int64_t c, std::int64_t ratio) {
  fc1 = Linear<T>(store, join_path(path, "fc1"), c, c * ratio);
  fc2 = Linear<T>(store, join_path(path, "fc2"), c * ratio, c);
}

template <typename T>
Qcsa<T>::Qcsa(ParamStore<T>& store, const std::string& path, std::int64_t c, std::int64_t heads,
              std::int64_t window, std::int64_t mlp_ratio, std::int64_t shift_, bool cross_)
    : cross(cross_), shift(shift_) {
  if (shift != 0 && shift * 2 != window) {
    throw ValueError("qcsa: shift must be 0 or window/2");
  }
  norm_image = LayerNorm<T>(store, join_path(path, "norm_image"), c);
  if (cross) norm_pos = LayerNorm<T>(store, join_path(path, "norm_pos"), c);
  attn = WindowAttention<T>(store, join_path(path, "attn"), c, heads, window);
  norm_mlp = LayerNorm<T>(store, join_path(path, "norm_mlp"), c);
  mlp = Mlp<T>(store, join_path(path, "mlp"), c, mlp_ratio);
}

template <typename T>
Tensor<T> Qcsa<T>::operator()(const Tensor<T>& image, const Tensor<T>& pos) const {
  CostScope scope("qcsa");
  const auto xi = norm_image(image);
  const auto f = add(attn(xi, cross ? norm_pos(pos) : xi, shift), image);
  return add(mlp(norm_mlp(f)), f);
}

// ---- SS2D ----

template <typename T>
Ss2d<T>::Ss2d(ParamStore<T>& store, const std::string& path, std::int64_t c, std::int64_t n)
    : channels(c), state(n), rank(dt_rank(c)) {
  static const char* kNames[4] = {"row_fwd", "row_bwd", "col_fwd", "col_bwd"};
  for (int k = 0; k < 4; ++k) {
    const auto dir = join_path(path, kNames[k]);
    auto& d = dirs[k];
    d.x_proj = Linear<T>(store, join_path(dir, "x_proj"), c, rank + 2 * n, false);
    d.dt_proj = Linear<T>(store, join_path(dir, "dt_proj"), rank, c, false);
    // dt bias: softplus^-1 of a log-uniform step in [1e-3, 1e-1].
    const auto bias_name = join_path(join_path(dir, "dt_proj"), "bias");
    Rng rng(store.seed_for(bias_name));
    std::vector<double> dt(static_cast<std::size_t>(c));
    for (auto& v : dt) {
      const double step = std::exp(std::log(1e-3) + uniform01(rng) * (std::log(1e-1) - std::log(1e-3)));
      v = step + std::log(-std::expm1(-step));
    }
    d.dt_proj.bias = store.add(bias_name, {c}, dt);
    std::vector<double> a(static_cast<std::size_t>(c * n));
    for (std::int64_t i = 0; i < c; ++i)
      for (std::int64_t j = 0; j < n; ++j) a[static_cast<std::size_t>(i * n + j)] = std::log(double(j + 1));
    d.a_log = store.add(join_path(dir, "a_log"), {c, n}, a);
    d.skip = store.add(join_path(dir, "skip"), {c}, Init::kOnes);
  }
}

template <typename T>
Tensor<T> Ss2d<T>::direction(const Tensor<T>& x, int k) const {
  const auto& d = dirs[k];
  const auto proj = d.x_proj(x);
  const auto delta = softplus(d.dt_proj(slice_channels(proj, 0, rank)));
  const auto bmat = slice_channels(proj, rank, rank + state);
  const auto cmat = slice_channels(proj, rank + state, rank + 2 * state);
  const auto a = scale(exp(d.a_log), static_cast<T>(-1));
  return selective_scan(x, delta, a, bmat, cmat, d.skip, static_cast<ScanOrder>(k));
}

template <typename T>
Tensor<T> Ss2d<T>::operator()(const Tensor<T>& x) const {
  CostScope scope("ss2d");
  Tensor<T> y = direction(x, 0);
  for (int k = 1; k < 4; ++k) y = add(y, direction(x, k));
  return y;
}

// ---- RVSS ----

template <typename T>
Rvss<T>::Rvss(ParamStore<T>& store, const std::string& path, std::int64_t c,
              std::int64_t expand, std::int64_t n)
    : channels(c), inner(c * expand) {
  norm = LayerNorm<T>(store, join_path(path, "norm"), c);
  in_proj = Linear<T>(store, join_path(path, "in_proj"), c, 2 * inner);
  dw_weight = store.add(join_path(path, "dw.weight"), {3, 3, inner}, Init::kTruncNormal);
  dw_bias = store.add(join_path(path, "dw.bias"), {inner}, Init::kZeros);
  ss2d = Ss2d<T>(store, join_path(path, "ss2d"), inner, n);
  norm_scan = LayerNorm<T>(store, join_path(path, "norm_scan"), inner);
  out_proj = Linear<T>(store, join_path(path, "out_proj"), inner, c);
}

template <typename T>
Tensor<T> Rvss<T>::operator()(const Tensor<T>& x) const {
  CostScope scope("rvss");
  const auto proj = in_proj(norm(x));
  const auto gate = slice_channels(proj, 0, inner);
  auto sig = slice_channels(proj, inner, 2 * inner);
  sig = silu(dwconv3x3(sig, dw_weight, dw_bias));
  sig = norm_scan(ss2d(sig));
  return add(out_proj(mul(sig, silu(gate))), x);
}

template <typename T>
RConv<T>::RConv(ParamStore<T>& store, const std::string& path, std::int64_t c) {
  conv1 = Conv3<T>(store, join_path(path, "conv1"), c, c);
  conv2 = Conv3<T>(store, join_path(path, "conv2"), c, c);
}

// ---- CSSB / CSB ----

template <typename T>
DualBlock<T>::DualBlock(ParamStore<T>& store, const std::string& path, std::int64_t c,
                        std::int64_t pos_channels, const BlockDims& dims, AttnBranch attn,
                        ScanBranch scan, std::int64_t shift)
    : channels(c), attn_kind(attn), scan_kind(scan) {
  if (c <= 0 || c % 2) throw ValueError("split block needs an even channel count, got " + std::to_string(c));
  const auto half = c / 2;
  in_proj = Linear<T>(store, join_path(path, "in_proj"), c, c);
  if (attn == AttnBranch::kConv) {
    attn_conv = RConv<T>(store, join_path(path, "rconv_a"), half);
  } else {
    const bool cross = attn == AttnBranch::kCross;
    if (cross) pos_proj = Linear<T>(store, join_path(path, "pos_proj"), pos_channels, half);
    qcsa = Qcsa<T>(store, join_path(path, "qcsa"), half, dims.heads, dims.window, dims.mlp_ratio,
                   shift, cross);
  }
  if (scan == ScanBranch::kRvss) {
    rvss = Rvss<T>(store, join_path(path, "rvss"), half, dims.expand, dims.state);
  } else {
    scan_conv = RConv<T>(store, join_path(path, "rconv_s"), half);
  }
  out_proj = Linear<T>(store, join_path(path, "out_proj"), c, c);
}

template <typename T>
Tensor<T> DualBlock<T>::operator()(const Tensor<T>& image, const Tensor<T>& pos) const {
  if (image.dim(-1) != channels) {
    throw ShapeError("dual_block", image.shape(), Shape{channels}, "channel count");
  }
  const auto half = channels / 2;
  const auto x = in_proj(image);
  const auto x1 = slice_channels(x, 0, half);
  const auto x2 = slice_channels(x, half, channels);
  Tensor<T> y1;
  switch (attn_kind) {
    case AttnBranch::kCross:
      y1 = qcsa(x1, pos_proj(pos));
      break;
    case AttnBranch::kSelf:
      y1 = qcsa(x1, x1);
      break;
    case AttnBranch::kConv: {
      CostScope scope("rconv");
      y1 = attn_conv(x1);
      break;
    }
  }
  Tensor<T> y2;
  if (scan_kind == ScanBranch::kRvss) {
    y2 = rvss(x2);
  } else {
    CostScope scope("rconv");
    y2 = scan_conv(x2);
  }
  return add(out_proj(concat_channels<T>({y1, y2})), image);
}

#define TSANET_BLOCKS(T)                                                                   \
  template struct Linear<T>;                                                               \
  template struct Conv3<T>;                                                                \
  template struct LayerNorm<T>;                                                            \
  template struct Spa<T>;                                                                  \
  template struct WindowAttention<T>;                                                      \
  template struct Mlp<T>;                                                                  \
  template struct Qcsa<T>;                                                                 \
  template struct Ss2d<T>;                                                                 \
  template struct Rvss<T>;                                                                 \
  template struct RConv<T>;                                                                \
  template struct DualBlock<T>;                                                            \
  template Tensor<T> window_partition(const Tensor<T>&, std::int64_t, std::int64_t);       \
  template Tensor<T> window_merge(const Tensor<T>&, std::int64_t, std::int64_t, std::int64_t, \
                                  std::int64_t);

TSANET_BLOCKS(float)
TSANET_BLOCKS(double)

}  // namespace tsanet
