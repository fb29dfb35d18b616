// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

// Differentiable primitives. Feature maps are NHWC; "channels" always means
// the last axis. Every op validates shapes and throws ShapeError naming
// itself and the offending shapes.

#pragma once

#include <cstdint>
#include <vector>

#include "tsanet/tensor.hpp"

namespace tsanet::ops {

// Elementwise. `b` may equal a's shape or be a suffix of it (broadcast over
// the leading axes of `a`).
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T factor);
template <typename T> Tensor<T> add_scalar(const Tensor<T>& a, T value);
template <typename T> Tensor<T> exp(const Tensor<T>& a);
template <typename T> Tensor<T> relu(const Tensor<T>& a);
// tanh approximation.
template <typename T> Tensor<T> gelu(const Tensor<T>& a);
template <typename T> Tensor<T> silu(const Tensor<T>& a);
template <typename T> Tensor<T> softplus(const Tensor<T>& a);

// x[..., K] @ w[K, N] (+ bias[N]). This is also the 1x1 convolution on NHWC.
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias = {});
// Batched a[G, M, K] @ b[G, K, N], or b[G, N, K] transposed when transpose_b.
template <typename T>
Tensor<T> bmm(const Tensor<T>& a, const Tensor<T>& b, bool transpose_b = false);
// Zero-padded "same" 3x3 convolution. w: [3, 3, Cin, Cout].
template <typename T>
Tensor<T> conv3x3(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias = {});
// Depthwise variant. w: [3, 3, C].
template <typename T>
Tensor<T> dwconv3x3(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias = {});

inline constexpr double kLayerNormEps = 1e-6;
// Normalizes over the last axis; a constant vector maps to `bias`.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias,
                     double eps = kLayerNormEps);
template <typename T> Tensor<T> softmax(const Tensor<T>& x);

template <typename T> Tensor<T> sum(const Tensor<T>& x);
template <typename T> Tensor<T> mean(const Tensor<T>& x);
// mean(sqrt((pred - target)^2 + eps^2)).
template <typename T>
Tensor<T> charbonnier(const Tensor<T>& pred, const Tensor<T>& target, double eps);

template <typename T> Tensor<T> reshape(const Tensor<T>& x, const Shape& shape);
template <typename T>
Tensor<T> permute(const Tensor<T>& x, const std::vector<int>& perm);

enum class PadMode { kZero, kReflect };
// Spatial padding of an NHWC map.
template <typename T>
Tensor<T> pad(const Tensor<T>& x, std::int64_t top, std::int64_t bottom, std::int64_t left,
              std::int64_t right, PadMode mode);
template <typename T>
Tensor<T> crop(const Tensor<T>& x, std::int64_t y0, std::int64_t x0, std::int64_t height,
               std::int64_t width);
// Cyclic spatial shift: out[y, x] = in[(y - dy) mod H, (x - dx) mod W].
template <typename T>
Tensor<T> roll(const Tensor<T>& x, std::int64_t dy, std::int64_t dx);
// [B, H, W, C] <-> [B, H/2, W/2, 4C]; channel index = (dy * 2 + dx) * C + c.
template <typename T> Tensor<T> pixel_unshuffle(const Tensor<T>& x);
template <typename T> Tensor<T> pixel_shuffle(const Tensor<T>& x);
template <typename T>
Tensor<T> slice_channels(const Tensor<T>& x, std::int64_t begin, std::int64_t end);
template <typename T>
Tensor<T> concat_channels(const std::vector<Tensor<T>>& parts);

// Sinusoidal encoding. For each input channel c the output holds
// sin(2*pi*2^l*p) for l < L at c*2L + l and the matching cos at c*2L + L + l.
template <typename T> Tensor<T> fourier_features(const Tensor<T>& p, int frequencies);

// Expands a relative-position table [(2M-1)^2, heads] into [heads, M*M, M*M]
// with entry (i, j) = table[(dy + M - 1) * (2M - 1) + (dx + M - 1)], where
// (dy, dx) = pos(i) - pos(j).
template <typename T>
Tensor<T> relative_bias(const Tensor<T>& table, std::int64_t window);

enum class ScanOrder {
  kRowForward,    // row-major, left to right
  kRowBackward,   // row-major, right to left (full reversal)
  kColForward,    // column-major, top to bottom
  kColBackward,   // column-major, reversed
};

// Selective state-space scan over the spatial positions of x [B, H, W, D]
// taken in `order`. delta [B, H, W, D] (> 0), a [D, N] (state matrix
// diagonal), b/c [B, H, W, N], skip [D]:
//   h_t = exp(delta_t * a) * h_{t-1} + delta_t * b_t * x_t,  h_0 = 0
//   y_t = <c_t, h_t> + skip * x_t
// A 1-D sequence is the H = 1 case with kRowForward.
template <typename T>
Tensor<T> selective_scan(const Tensor<T>& x, const Tensor<T>& delta, const Tensor<T>& a,
                         const Tensor<T>& b, const Tensor<T>& c, const Tensor<T>& skip,
                         ScanOrder order);

}  // namespace tsanet::ops
