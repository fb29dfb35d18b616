// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

// Quad Bayer HybridEVS raw simulation: mosaicing, event-pixel masking,
// noise, coarse inpainting and the positional prior maps.

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace tsanet {

enum class CfaColor : std::uint8_t { kRed = 0, kGreen = 1, kBlue = 2 };

struct CfaSpec {
  std::array<std::array<CfaColor, 4>, 4> tile{};
  std::array<std::array<std::uint8_t, 4>, 4> event_mask{};  // 1 = event pixel
  std::string version;

  // RGGB quads; event pixels at (0,2) and (1,3) of each 4x4 tile.
  static CfaSpec quad_bayer_default();

  // Throws ConfigError unless the tile holds 4 R, 8 G, 4 B laid out as
  // 2x2 same-color quads and the mask is binary.
  void validate() const;

  CfaColor color_at(std::int64_t y, std::int64_t x) const { return tile[y & 3][x & 3]; }
  bool is_event(std::int64_t y, std::int64_t x) const { return event_mask[y & 3][x & 3] != 0; }
  int events_per_tile() const;
};

char color_letter(CfaColor c);
CfaColor color_from_letter(char c);

// Interleaved HWC, values in [0, 1].
struct RgbImage {
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::vector<float> data;

  RgbImage() = default;
  RgbImage(std::int64_t h, std::int64_t w, float fill = 0.0f)
      : height(h), width(w), data(static_cast<std::size_t>(h * w * 3), fill) {}
  float& at(std::int64_t y, std::int64_t x, int c) { return data[(y * width + x) * 3 + c]; }
  float at(std::int64_t y, std::int64_t x, int c) const { return data[(y * width + x) * 3 + c]; }
};

struct RawImage {
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::vector<float> data;
  std::vector<std::uint8_t> events;  // empty, or 1 per pixel (1 = event)

  RawImage() = default;
  RawImage(std::int64_t h, std::int64_t w, float fill = 0.0f)
      : height(h), width(w), data(static_cast<std::size_t>(h * w), fill) {}
  float& at(std::int64_t y, std::int64_t x) { return data[y * width + x]; }
  float at(std::int64_t y, std::int64_t x) const { return data[y * width + x]; }
  bool has_events() const { return !events.empty(); }
  bool is_event(std::int64_t y, std::int64_t x) const {
    return has_events() && events[y * width + x] != 0;
  }
};

// Pq: one-hot CFA color (HWC, 3 channels). Pe: 1 at event pixels.
struct PositionMaps {
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::vector<float> pq;
  std::vector<float> pe;
};

RawImage mosaic_quad_bayer(const RgbImage& rgb, const CfaSpec& spec);
// Zeroes event positions and records the event flag plane.
RawImage apply_event_mask(const RawImage& raw, const CfaSpec& spec);
// clamp(raw + N(0, sigma^2), 0, 1); flagged event pixels stay exactly 0.
RawImage add_gaussian_noise(const RawImage& raw, double sigma, std::uint64_t seed);
// Fills each flagged event pixel with the mean of the non-event members of
// its 2x2 quad, falling back to the nearest ring of same-color quads.
RawImage coarse_inpaint(const RawImage& raw, const CfaSpec& spec);
PositionMaps make_position_maps(const CfaSpec& spec, std::int64_t height, std::int64_t width);
// The Q2Q target / Q2R pretraining input: plain mosaic, no masking or noise.
RawImage synth_clean_quad(const RgbImage& rgb, const CfaSpec& spec);

// Everything one training/eval example needs, aligned pixel for pixel.
struct Sample {
  RawImage degraded;  // masked (+ noise) raw, before coarse inpainting
  RawImage inpainted; // network input for stage one
  RawImage clean;     // clean quad target
  RgbImage rgb;
  PositionMaps maps;
};

Sample synthesize_sample(const RgbImage& rgb, const CfaSpec& spec, double noise_sigma,
                         std::uint64_t noise_seed);

struct PatchCorner {
  std::int64_t y = 0;
  std::int64_t x = 0;
};

// Top-left corners on the 4-pixel lattice, drawn with `seed`.
std::vector<PatchCorner> draw_patch_corners(std::int64_t height, std::int64_t width,
                                            std::int64_t size, std::int64_t count,
                                            std::uint64_t seed);
Sample crop_sample(const Sample& sample, PatchCorner corner, std::int64_t size);
std::vector<Sample> extract_patches(const Sample& sample, std::int64_t size, std::int64_t count,
                                    std::uint64_t seed);

RgbImage crop_rgb(const RgbImage& img, std::int64_t y0, std::int64_t x0, std::int64_t h,
                  std::int64_t w);
RawImage crop_raw(const RawImage& img, std::int64_t y0, std::int64_t x0, std::int64_t h,
                  std::int64_t w);

// Reference demosaicer: per channel, mean of the same-color non-event
// samples in the 5x5 neighbourhood.
RgbImage box_demosaic(const RawImage& raw, const CfaSpec& spec);

// Gradients, sharp-edged disks and rectangles, and fine color gratings;
// deterministic in `seed`. Used to build toy datasets without external images.
RgbImage procedural_image(std::int64_t height, std::int64_t width, std::uint64_t seed);

}  // namespace tsanet
