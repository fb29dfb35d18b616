// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

// Architectural units. Every block registers its parameters in a ParamStore
// under a dotted path at construction and is a pure function of its inputs
// and those parameters afterwards. Feature maps are [B, H, W, C].

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tsanet/ops.hpp"
#include "tsanet/tensor.hpp"

namespace tsanet {

enum class Init { kZeros, kOnes, kTruncNormal };

inline constexpr double kInitStd = 0.02;

// Named parameters in registration order. Initial values depend only on
// (seed, name), so toggling one module never perturbs another's init.
template <typename T>
class ParamStore {
 public:
  struct Entry {
    std::string name;
    Tensor<T> value;
  };

  explicit ParamStore(std::uint64_t seed = 0) : seed_(seed) {}

  Tensor<T> add(const std::string& name, const Shape& shape, Init init,
                double stddev = kInitStd);
  Tensor<T> add(const std::string& name, const Shape& shape, const std::vector<double>& values);

  bool contains(const std::string& name) const;
  // Throws ValueError naming the missing path.
  Tensor<T> at(const std::string& name) const;
  const std::vector<Entry>& entries() const { return entries_; }
  // Scalars under `prefix` (all when empty).
  std::int64_t count(const std::string& prefix = "") const;
  void zero_grad();
  // Seed for parameters with custom random initialization.
  std::uint64_t seed_for(const std::string& name) const;

 private:
  std::uint64_t seed_;
  std::vector<Entry> entries_;
};

std::string join_path(const std::string& prefix, const std::string& name);

template <typename T>
struct Linear {
  Tensor<T> weight;  // [in, out]
  Tensor<T> bias;    // [out] or undefined

  Linear() = default;
  Linear(ParamStore<T>& store, const std::string& path, std::int64_t in, std::int64_t out,
         bool with_bias = true, Init init = Init::kTruncNormal);
  Tensor<T> operator()(const Tensor<T>& x) const { return ops::linear(x, weight, bias); }
};

template <typename T>
struct Conv3 {
  Tensor<T> weight;  // [3, 3, in, out]
  Tensor<T> bias;

  Conv3() = default;
  Conv3(ParamStore<T>& store, const std::string& path, std::int64_t in, std::int64_t out,
        Init init = Init::kTruncNormal);
  Tensor<T> operator()(const Tensor<T>& x) const { return ops::conv3x3(x, weight, bias); }
};

template <typename T>
struct LayerNorm {
  Tensor<T> gain;
  Tensor<T> bias;

  LayerNorm() = default;
  LayerNorm(ParamStore<T>& store, const std::string& path, std::int64_t channels);
  Tensor<T> operator()(const Tensor<T>& x) const { return ops::layer_norm(x, gain, bias); }
};

// out = P_i(LN(F_I)) * ReLU(P_p(LN(F_P))) + F_I. With gated=false the
// position path is dropped: out = P_i(LN(F_I)) + F_I.
template <typename T>
struct Spa {
  bool gated = true;
  LayerNorm<T> norm_image, norm_pos;
  Linear<T> proj_image, proj_pos;

  Spa() = default;
  Spa(ParamStore<T>& store, const std::string& path, std::int64_t channels,
      std::int64_t pos_channels, bool gated = true);
  Tensor<T> operator()(const Tensor<T>& image, const Tensor<T>& pos) const;
};

// [B, H, W, C] -> [B * (H/M) * (W/M), M*M, C] after a cyclic shift by
// (-shift, -shift); window_merge is the exact inverse.
template <typename T>
Tensor<T> window_partition(const Tensor<T>& x, std::int64_t window, std::int64_t shift);
template <typename T>
Tensor<T> window_merge(const Tensor<T>& windows, std::int64_t batch, std::int64_t height,
                       std::int64_t width, std::int64_t shift);

// Additive logit mask [nW, M*M, M*M] for a shifted partition: 0 between
// positions on the same side of the wrap seam, -1e9 otherwise.
std::vector<double> seam_mask(std::int64_t height, std::int64_t width, std::int64_t window,
                              std::int64_t shift);

// Window multi-head attention. Cross mode takes queries from the position
// windows and keys/values from the image windows.
template <typename T>
struct WindowAttention {
  std::int64_t channels = 0, heads = 1, window = 1;
  Linear<T> q, k, v, out;
  Tensor<T> bias_table;  // [(2M-1)^2, heads]

  WindowAttention() = default;
  WindowAttention(ParamStore<T>& store, const std::string& path, std::int64_t channels,
                  std::int64_t heads, std::int64_t window);
  // image, query_source: [B, H, W, C].
  Tensor<T> operator()(const Tensor<T>& image, const Tensor<T>& query_source,
                       std::int64_t shift) const;
};

template <typename T>
struct Mlp {
  Linear<T> fc1, fc2;

  Mlp() = default;
  Mlp(ParamStore<T>& store, const std::string& path, std::int64_t channels, std::int64_t ratio);
  Tensor<T> operator()(const Tensor<T>& x) const { return fc2(ops::gelu(fc1(x))); }
};

// F = WMCA(LN(F_I), LN(F_P)) + F_I;  F = MLP(LN(F)) + F.
// cross=false gives plain shifted-window self-attention (position unused).
template <typename T>
struct Qcsa {
  bool cross = true;
  std::int64_t shift = 0;
  LayerNorm<T> norm_image, norm_pos, norm_mlp;
  WindowAttention<T> attn;
  Mlp<T> mlp;

  Qcsa() = default;
  Qcsa(ParamStore<T>& store, const std::string& path, std::int64_t channels, std::int64_t heads,
       std::int64_t window, std::int64_t mlp_ratio, std::int64_t shift, bool cross = true);
  Tensor<T> operator()(const Tensor<T>& image, const Tensor<T>& pos) const;
};

// Per-direction selective-scan parameters over `channels` inner channels.
// Delta = softplus(dt_proj(x_proj(x)[:R]) + dt bias) with low rank R;
// B, C = the remaining 2N columns of x_proj(x).
template <typename T>
struct ScanDirection {
  Linear<T> x_proj;   // channels -> R + 2N, no bias
  Linear<T> dt_proj;  // R -> channels, with the dt bias
  Tensor<T> a_log;    // [channels, N]; A = -exp(a_log)
  Tensor<T> skip;     // [channels]
};

inline std::int64_t dt_rank(std::int64_t channels) { return (channels + 15) / 16; }

template <typename T>
struct Ss2d {
  std::int64_t channels = 0, state = 0, rank = 1;
  ScanDirection<T> dirs[4];  // row fwd, row bwd, col fwd, col bwd

  Ss2d() = default;
  Ss2d(ParamStore<T>& store, const std::string& path, std::int64_t channels, std::int64_t state);
  Tensor<T> operator()(const Tensor<T>& x) const;
  Tensor<T> direction(const Tensor<T>& x, int k) const;
};

template <typename T>
struct Rvss {
  std::int64_t channels = 0, inner = 0;
  LayerNorm<T> norm, norm_scan;
  Linear<T> in_proj, out_proj;
  Tensor<T> dw_weight, dw_bias;
  Ss2d<T> ss2d;

  Rvss() = default;
  Rvss(ParamStore<T>& store, const std::string& path, std::int64_t channels,
       std::int64_t expand, std::int64_t state);
  Tensor<T> operator()(const Tensor<T>& x) const;
};

template <typename T>
struct RConv {
  Conv3<T> conv1, conv2;

  RConv() = default;
  RConv(ParamStore<T>& store, const std::string& path, std::int64_t channels);
  Tensor<T> operator()(const Tensor<T>& x) const { return ops::add(conv2(ops::relu(conv1(x))), x); }
};

struct BlockDims {
  std::int64_t heads = 2;
  std::int64_t window = 8;
  std::int64_t mlp_ratio = 2;
  std::int64_t expand = 2;
  std::int64_t state = 8;
};

enum class AttnBranch { kCross, kSelf, kConv };
enum class ScanBranch { kRvss, kConv };

// Split-channel dual-branch block. kCross is CSSB; kConv is CSB.
template <typename T>
struct DualBlock {
  std::int64_t channels = 0;
  AttnBranch attn_kind = AttnBranch::kConv;
  ScanBranch scan_kind = ScanBranch::kRvss;
  Linear<T> in_proj, out_proj, pos_proj;
  Qcsa<T> qcsa;
  RConv<T> attn_conv, scan_conv;
  Rvss<T> rvss;

  DualBlock() = default;
  DualBlock(ParamStore<T>& store, const std::string& path, std::int64_t channels,
            std::int64_t pos_channels, const BlockDims& dims, AttnBranch attn, ScanBranch scan,
            std::int64_t shift);
  // `pos` is only read in kCross mode.
  Tensor<T> operator()(const Tensor<T>& image, const Tensor<T>& pos = {}) const;
};

}  // namespace tsanet
