// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

// The two-stage network. Q2Q inpaints event pixels in the raw domain; Q2R
// demosaics the clean quad raw into RGB. Both are 3-level U-Nets with a
// position branch fed by Fourier features of the CFA/event maps.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tsanet/blocks.hpp"
#include "tsanet/cfa.hpp"

namespace tsanet {

struct Toggles {
  bool qcsa = true;  // off: shifted-window self-attention
  bool spa = true;   // off: plain 1x1 conv on the image path
  bool rvss = true;  // off: residual conv
  bool ffm = true;   // off: raw position maps
};

struct StageConfig {
  std::vector<std::int64_t> widths;  // one per U-Net level
  std::int64_t blocks = 2;           // per level
};

struct ModelConfig {
  std::string variant = "toy";
  StageConfig q2q;
  StageConfig q2r;
  BlockDims dims;
  int ffm_frequencies = 4;
  // Position maps are binary, and sin/cos at integer multiples of 2*pi are
  // constant on {0, 1}; the maps are scaled by this before encoding.
  double ffm_input_scale = 1.0 / 32.0;
  Toggles toggles;
  CfaSpec cfa = CfaSpec::quad_bayer_default();
  std::uint64_t seed = 0;

  static ModelConfig preset(const std::string& variant);
  std::int64_t levels() const { return static_cast<std::int64_t>(q2r.widths.size()); }
  // Spatial extents are padded to a multiple of this.
  std::int64_t pad_multiple() const;
  void validate() const;
};

// Batched network inputs, NHWC.
template <typename T>
struct NetInputs {
  Tensor<T> inpainted;  // [B, H, W, 1]
  Tensor<T> pq;         // [B, H, W, 3]
  Tensor<T> pe;         // [B, H, W, 1]
};

template <typename T>
struct NetTargets {
  Tensor<T> clean;  // [B, H, W, 1]
  Tensor<T> rgb;    // [B, H, W, 3]
};

template <typename T>
NetInputs<T> make_inputs(const std::vector<Sample>& batch);
template <typename T>
NetTargets<T> make_targets(const std::vector<Sample>& batch);
template <typename T>
Tensor<T> raw_tensor(const std::vector<const RawImage*>& raws);
template <typename T>
Tensor<T> rgb_tensor(const std::vector<const RgbImage*>& images);
RgbImage to_rgb_image(const Tensor<float>& t, std::int64_t index = 0);
RawImage to_raw_image(const Tensor<float>& t, std::int64_t index = 0);

enum class StageKind { kQ2Q, kQ2R };

template <typename T>
class UNet {
 public:
  UNet() = default;
  UNet(ParamStore<T>& store, const std::string& path, StageKind kind, const ModelConfig& config);

  // image: stage input [B, H, W, Cin]; pos_maps: [B, H, W, Cp] or undefined
  // when the stage has no position branch. Extents must conform.
  Tensor<T> operator()(const Tensor<T>& image, const Tensor<T>& pos_maps) const;
  bool uses_position() const { return uses_position_; }

 private:
  struct Level {
    std::vector<DualBlock<T>> encoder, decoder;
    Spa<T> spa;
    Linear<T> down, pos_down, up, fuse;
  };
  StageKind kind_ = StageKind::kQ2Q;
  bool uses_position_ = false;
  bool ffm_ = true;
  int ffm_frequencies_ = 4;
  double ffm_scale_ = 1.0;
  Conv3<T> stem_, head_;
  Linear<T> pos_stem_;
  std::vector<Level> levels_;
};

template <typename T>
class TsaNet {
 public:
  explicit TsaNet(const ModelConfig& config);
  TsaNet(const TsaNet&) = delete;
  TsaNet& operator=(const TsaNet&) = delete;

  const ModelConfig& config() const { return config_; }
  ParamStore<T>& params() { return params_; }
  const ParamStore<T>& params() const { return params_; }

  // Any extents: inputs are reflect-padded to pad_multiple() and the output
  // is cropped back.
  Tensor<T> forward_q2q(const Tensor<T>& inpainted, const Tensor<T>& pq, const Tensor<T>& pe) const;
  // Q2R adds its head to a fixed same-color interpolation of the quad.
  Tensor<T> forward_q2r(const Tensor<T>& clean, const Tensor<T>& pq) const;
  Tensor<T> forward(const NetInputs<T>& in) const {
    return forward_q2r(forward_q2q(in.inpainted, in.pq, in.pe), in.pq);
  }

 private:
  ModelConfig config_;
  ParamStore<T> params_;
  UNet<T> q2q_, q2r_;
};

struct CostReport {
  std::int64_t params_q2q = 0;
  std::int64_t params_q2r = 0;
  std::int64_t params_total = 0;
  // FLOPs = 2 x counted multiply-adds at (height, width).
  std::int64_t height = 0, width = 0;
  std::int64_t flops_q2q = 0;
  std::int64_t flops_q2r = 0;
  std::int64_t flops_total = 0;
  std::map<std::string, std::int64_t> macs_by_path;
};

template <typename T>
CostReport count_params(const TsaNet<T>& net);
template <typename T>
CostReport count_flops(const TsaNet<T>& net, std::int64_t height, std::int64_t width);

// Copies every parameter by name (float <-> double).
template <typename T, typename U>
void copy_params(const TsaNet<T>& from, TsaNet<U>& to);

}  // namespace tsanet
