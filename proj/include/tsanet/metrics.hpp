// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

// PSNR and single-scale SSIM on images in [0, max_val], and the dataset
// evaluation report.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "tsanet/config.hpp"

namespace tsanet {

inline constexpr double kPsnrCap = 100.0;
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

// A channel-interleaved plane stack: height x width x channels.
struct ImageView {
  const float* data = nullptr;
  std::int64_t height = 0, width = 0, channels = 1;
};

ImageView view(const RgbImage& img);
ImageView view(const RawImage& img);

// 10 log10(max^2 / MSE) over all channels; 100 dB when MSE is 0.
double psnr(ImageView pred, ImageView target, double max_val = 1.0);

struct SsimParts {
  double ssim = 0.0;
  double cs = 0.0;  // contrast-structure term alone
};

// Gaussian 11x11 window, sigma 1.5, dynamic range 1; the map is averaged
// over valid window positions, then over channels.
SsimParts ssim_parts(ImageView a, ImageView b);
inline double ssim(ImageView a, ImageView b) { return ssim_parts(a, b).ssim; }

// The normalized 11x11 window, row-major.
std::vector<double> ssim_window();

struct EvalRow {
  std::string name;
  double psnr = 0.0;
  double ssim = 0.0;
  std::string error;  // empty on success
};

struct EvalReport {
  std::vector<EvalRow> rows;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  std::int64_t evaluated = 0;
  std::int64_t failed = 0;
  nlohmann::json config;

  std::string to_csv() const;
  nlohmann::json summary() const;
};

using Demosaicer = std::function<RgbImage(const Sample&)>;

// Runs the full pipeline (TsaNet forward) on one synthesized sample.
Demosaicer network_demosaicer(const TsaNet<float>& net);
// Reference stub: box demosaic of the coarse-inpainted raw.
Demosaicer box_demosaicer(const CfaSpec& spec);

// Per-image PSNR/SSIM under config.eval; unreadable images become error
// rows and the run continues. Rows follow manifest order.
EvalReport eval_dataset(const Demosaicer& model, const std::vector<std::filesystem::path>& images,
                        const RunConfig& config);

// Applies the PSNR protocol (luma conversion, border crop) and scores one
// prediction.
EvalRow score_image(const RgbImage& pred, const RgbImage& target, const EvalConfig& eval);

}  // namespace tsanet
