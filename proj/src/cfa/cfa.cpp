// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include "tsanet/cfa.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tsanet/error.hpp"
#include "tsanet/rng.hpp"

namespace tsanet {

namespace {

void require_tiled(const char* op, std::int64_t h, std::int64_t w) {
  if (h <= 0 || w <= 0 || h % 4 || w % 4) {
    throw ShapeError(op, Shape{h, w}, Shape{4, 4}, "extents must be positive multiples of 4");
  }
}

}  // namespace

CfaSpec CfaSpec::quad_bayer_default() {
  using C = CfaColor;
  CfaSpec spec;
  spec.tile = {{{C::kRed, C::kRed, C::kGreen, C::kGreen},
                {C::kRed, C::kRed, C::kGreen, C::kGreen},
                {C::kGreen, C::kGreen, C::kBlue, C::kBlue},
                {C::kGreen, C::kGreen, C::kBlue, C::kBlue}}};
  spec.event_mask = {{{0, 0, 1, 0}, {0, 0, 0, 1}, {0, 0, 0, 0}, {0, 0, 0, 0}}};
  spec.version = "quad-rggb/ev-0.2-1.3/v1";
  return spec;
}

void CfaSpec::validate() const {
  int counts[3] = {0, 0, 0};
  for (const auto& row : tile) {
    for (auto c : row) {
      const int k = static_cast<int>(c);
      if (k < 0 || k > 2) throw ConfigError("cfa tile holds an invalid color code");
      ++counts[k];
    }
  }
  if (counts[0] != 4 || counts[1] != 8 || counts[2] != 4) {
    throw ConfigError("cfa tile must hold 4 R, 8 G and 4 B entries");
  }
  for (int qy = 0; qy < 4; qy += 2) {
    for (int qx = 0; qx < 4; qx += 2) {
      const auto c = tile[qy][qx];
      if (tile[qy][qx + 1] != c || tile[qy + 1][qx] != c || tile[qy + 1][qx + 1] != c) {
        throw ConfigError("cfa tile must consist of 2x2 same-color quads");
      }
    }
  }
  for (const auto& row : event_mask) {
    for (auto v : row) {
      if (v > 1) throw ConfigError("event mask must be binary");
    }
  }
  if (version.empty()) throw ConfigError("cfa spec needs a version tag");
}

int CfaSpec::events_per_tile() const {
  int n = 0;
  for (const auto& row : event_mask)
    for (auto v : row) n += v;
  return n;
}

char color_letter(CfaColor c) {
  switch (c) {
    case CfaColor::kRed: return 'R';
    case CfaColor::kGreen: return 'G';
    case CfaColor::kBlue: return 'B';
  }
  return '?';
}

CfaColor color_from_letter(char c) {
  switch (c) {
    case 'R': return CfaColor::kRed;
    case 'G': return CfaColor::kGreen;
    case 'B': return CfaColor::kBlue;
    default: throw ConfigError(std::string("unknown cfa color letter '") + c + "'");
  }
}

RawImage mosaic_quad_bayer(const RgbImage& rgb, const CfaSpec& spec) {
  require_tiled("mosaic_quad_bayer", rgb.height, rgb.width);
  RawImage raw(rgb.height, rgb.width);
  for (std::int64_t y = 0; y < rgb.height; ++y)
    for (std::int64_t x = 0; x < rgb.width; ++x)
      raw.at(y, x) = rgb.at(y, x, static_cast<int>(spec.color_at(y, x)));
  return raw;
}

RawImage apply_event_mask(const RawImage& raw, const CfaSpec& spec) {
  require_tiled("apply_event_mask", raw.height, raw.width);
  RawImage out = raw;
  out.events.assign(raw.data.size(), 0);
  for (std::int64_t y = 0; y < raw.height; ++y) {
    for (std::int64_t x = 0; x < raw.width; ++x) {
      if (spec.is_event(y, x)) {
        out.at(y, x) = 0.0f;
        out.events[y * raw.width + x] = 1;
      }
    }
  }
  return out;
}

RawImage add_gaussian_noise(const RawImage& raw, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw ValueError("add_gaussian_noise: sigma must be >= 0");
  RawImage out = raw;
  if (sigma == 0.0) return out;
  Rng rng(derive_seed(seed, {0x6e6f697365ULL}));
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double v = static_cast<double>(out.data[i]) + sigma * standard_normal(rng);
    out.data[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
  }
  if (out.has_events()) {
    for (std::size_t i = 0; i < out.data.size(); ++i)
      if (out.events[i]) out.data[i] = 0.0f;
  }
  return out;
}

RawImage coarse_inpaint(const RawImage& raw, const CfaSpec& spec) {
  RawImage out = raw;
  if (!raw.has_events()) return out;
  const std::int64_t qh = (raw.height + 1) / 2, qw = (raw.width + 1) / 2;
  // Sum and count of non-event members per 2x2 quad.
  std::vector<double> qsum(static_cast<std::size_t>(qh * qw), 0.0);
  std::vector<int> qcount(static_cast<std::size_t>(qh * qw), 0);
  for (std::int64_t y = 0; y < raw.height; ++y) {
    for (std::int64_t x = 0; x < raw.width; ++x) {
      if (raw.is_event(y, x)) continue;
      const auto q = (y / 2) * qw + x / 2;
      qsum[q] += raw.at(y, x);
      ++qcount[q];
    }
  }
  constexpr std::int64_t kMaxRing = 8;
  for (std::int64_t y = 0; y < raw.height; ++y) {
    for (std::int64_t x = 0; x < raw.width; ++x) {
      if (!raw.is_event(y, x)) continue;
      const std::int64_t qy = y / 2, qx = x / 2;
      const auto own = qy * qw + qx;
      if (qcount[own] > 0) {
        out.at(y, x) = static_cast<float>(qsum[own] / qcount[own]);
        continue;
      }
      const CfaColor color = spec.color_at(y, x);
      // Rings of same-color quads by squared quad distance.
      float filled = 0.0f;
      for (std::int64_t d2 = 1; d2 <= kMaxRing * kMaxRing; ++d2) {
        double sum = 0.0;
        int count = 0;
        bool ring_exists = false;
        for (std::int64_t dy = -kMaxRing; dy <= kMaxRing; ++dy) {
          for (std::int64_t dx = -kMaxRing; dx <= kMaxRing; ++dx) {
            if (dy * dy + dx * dx != d2) continue;
            const std::int64_t ny = qy + dy, nx = qx + dx;
            if (ny < 0 || nx < 0 || ny >= qh || nx >= qw) continue;
            if (spec.color_at(2 * ny, 2 * nx) != color) continue;
            ring_exists = true;
            sum += qsum[ny * qw + nx];
            count += qcount[ny * qw + nx];
          }
        }
        if (ring_exists && count > 0) {
          filled = static_cast<float>(sum / count);
          break;
        }
      }
      out.at(y, x) = filled;
    }
  }
  return out;
}

PositionMaps make_position_maps(const CfaSpec& spec, std::int64_t height, std::int64_t width) {
  require_tiled("make_position_maps", height, width);
  PositionMaps maps;
  maps.height = height;
  maps.width = width;
  maps.pq.assign(static_cast<std::size_t>(height * width * 3), 0.0f);
  maps.pe.assign(static_cast<std::size_t>(height * width), 0.0f);
  for (std::int64_t y = 0; y < height; ++y) {
    for (std::int64_t x = 0; x < width; ++x) {
      const auto p = y * width + x;
      maps.pq[p * 3 + static_cast<int>(spec.color_at(y, x))] = 1.0f;
      maps.pe[p] = spec.is_event(y, x) ? 1.0f : 0.0f;
    }
  }
  return maps;
}

RawImage synth_clean_quad(const RgbImage& rgb, const CfaSpec& spec) {
  return mosaic_quad_bayer(rgb, spec);
}

Sample synthesize_sample(const RgbImage& rgb, const CfaSpec& spec, double noise_sigma,
                         std::uint64_t noise_seed) {
  Sample s;
  s.clean = synth_clean_quad(rgb, spec);
  // Noise goes in before masking so event pixels end exactly 0.
  s.degraded = apply_event_mask(add_gaussian_noise(s.clean, noise_sigma, noise_seed), spec);
  s.inpainted = coarse_inpaint(s.degraded, spec);
  s.rgb = rgb;
  s.maps = make_position_maps(spec, rgb.height, rgb.width);
  return s;
}

std::vector<PatchCorner> draw_patch_corners(std::int64_t height, std::int64_t width,
                                            std::int64_t size, std::int64_t count,
                                            std::uint64_t seed) {
  if (size <= 0 || size % 4) {
    throw ValueError("patch size must be a positive multiple of 4");
  }
  if (size > height || size > width) {
    throw ShapeError("extract_patches", Shape{height, width}, Shape{size, size},
                     "patch larger than image");
  }
  const std::int64_t ny = (height - size) / 4 + 1, nx = (width - size) / 4 + 1;
  Rng rng(derive_seed(seed, {0x7061746368ULL}));
  std::vector<PatchCorner> corners;
  corners.reserve(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) {
    const auto cy = static_cast<std::int64_t>(uniform01(rng) * static_cast<double>(ny));
    const auto cx = static_cast<std::int64_t>(uniform01(rng) * static_cast<double>(nx));
    corners.push_back({4 * std::min(cy, ny - 1), 4 * std::min(cx, nx - 1)});
  }
  return corners;
}

RgbImage crop_rgb(const RgbImage& img, std::int64_t y0, std::int64_t x0, std::int64_t h,
                  std::int64_t w) {
  RgbImage out(h, w);
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(y0 + y, x0 + x, c);
  return out;
}

RawImage crop_raw(const RawImage& img, std::int64_t y0, std::int64_t x0, std::int64_t h,
                  std::int64_t w) {
  RawImage out(h, w);
  if (img.has_events()) out.events.assign(static_cast<std::size_t>(h * w), 0);
  for (std::int64_t y = 0; y < h; ++y) {
    for (std::int64_t x = 0; x < w; ++x) {
      out.at(y, x) = img.at(y0 + y, x0 + x);
      if (img.has_events()) out.events[y * w + x] = img.events[(y0 + y) * img.width + x0 + x];
    }
  }
  return out;
}

Sample crop_sample(const Sample& s, PatchCorner corner, std::int64_t size) {
  Sample out;
  out.degraded = crop_raw(s.degraded, corner.y, corner.x, size, size);
  out.inpainted = crop_raw(s.inpainted, corner.y, corner.x, size, size);
  out.clean = crop_raw(s.clean, corner.y, corner.x, size, size);
  out.rgb = crop_rgb(s.rgb, corner.y, corner.x, size, size);
  out.maps.height = size;
  out.maps.width = size;
  out.maps.pq.resize(static_cast<std::size_t>(size * size * 3));
  out.maps.pe.resize(static_cast<std::size_t>(size * size));
  for (std::int64_t y = 0; y < size; ++y) {
    for (std::int64_t x = 0; x < size; ++x) {
      const auto src = (corner.y + y) * s.maps.width + corner.x + x;
      const auto dst = y * size + x;
      out.maps.pe[dst] = s.maps.pe[src];
      for (int c = 0; c < 3; ++c) out.maps.pq[dst * 3 + c] = s.maps.pq[src * 3 + c];
    }
  }
  return out;
}

std::vector<Sample> extract_patches(const Sample& sample, std::int64_t size, std::int64_t count,
                                    std::uint64_t seed) {
  const auto corners =
      draw_patch_corners(sample.rgb.height, sample.rgb.width, size, count, seed);
  std::vector<Sample> patches;
  patches.reserve(corners.size());
  for (const auto& c : corners) patches.push_back(crop_sample(sample, c, size));
  return patches;
}

RgbImage box_demosaic(const RawImage& raw, const CfaSpec& spec) {
  RgbImage out(raw.height, raw.width);
  for (std::int64_t y = 0; y < raw.height; ++y) {
    for (std::int64_t x = 0; x < raw.width; ++x) {
      double sum[3] = {0, 0, 0};
      int count[3] = {0, 0, 0};
      for (std::int64_t dy = -2; dy <= 2; ++dy) {
        for (std::int64_t dx = -2; dx <= 2; ++dx) {
          const std::int64_t yy = y + dy, xx = x + dx;
          if (yy < 0 || xx < 0 || yy >= raw.height || xx >= raw.width) continue;
          if (raw.is_event(yy, xx)) continue;
          const int c = static_cast<int>(spec.color_at(yy, xx));
          sum[c] += raw.at(yy, xx);
          ++count[c];
        }
      }
      for (int c = 0; c < 3; ++c) {
        out.at(y, x, c) = count[c] ? static_cast<float>(sum[c] / count[c]) : 0.0f;
      }
    }
  }
  return out;
}

RgbImage procedural_image(std::int64_t height, std::int64_t width, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0x696d616765ULL}));
  auto u = [&rng](double lo, double hi) { return lo + (hi - lo) * uniform01(rng); };
  double base[3], gy[3], gx[3];
  for (int c = 0; c < 3; ++c) {
    base[c] = u(0.25, 0.75);
    gy[c] = u(-0.3, 0.3);
    gx[c] = u(-0.3, 0.3);
  }
  // Shapes in pixel units with ~1 px edges: disks (kind 0) and rotated
  // rectangles (kind 1).
  struct Shape2 {
    int kind;
    double cy, cx, a, b, angle, opacity, col[3];
  };
  const double side = static_cast<double>(std::min(height, width));
  std::vector<Shape2> shapes(5);
  for (auto& sh : shapes) {
    sh.kind = uniform01(rng) < 0.5 ? 0 : 1;
    sh.cy = u(0.0, 1.0) * height;
    sh.cx = u(0.0, 1.0) * width;
    sh.a = u(0.06, 0.3) * side;
    sh.b = u(0.03, 0.2) * side;
    sh.angle = u(0.0, 3.14159);
    sh.opacity = u(0.5, 0.9);
    for (double& c : sh.col) c = u(0.0, 1.0);
  }
  // Two gratings with periods of a few pixels and per-channel amplitudes,
  // so color detail sits near the sampling rate of each quad.
  struct Grating {
    double fy, fx, phase, amp[3];
  };
  Grating gratings[2];
  for (auto& g : gratings) {
    const double period = u(5.0, 16.0), theta = u(0.0, 3.14159);
    g.fy = std::sin(theta) / period;
    g.fx = std::cos(theta) / period;
    g.phase = u(0.0, 6.283185307179586);
    for (double& a : g.amp) a = u(-0.12, 0.12);
  }
  RgbImage img(height, width);
  for (std::int64_t y = 0; y < height; ++y) {
    for (std::int64_t x = 0; x < width; ++x) {
      const double ny = (y + 0.5) / height, nx = (x + 0.5) / width;
      double v[3];
      for (int c = 0; c < 3; ++c) v[c] = base[c] + gy[c] * (ny - 0.5) + gx[c] * (nx - 0.5);
      for (const auto& g : gratings) {
        const double w = std::sin(6.283185307179586 * (g.fy * (y + 0.5) + g.fx * (x + 0.5)) + g.phase);
        for (int c = 0; c < 3; ++c) v[c] += g.amp[c] * w;
      }
      for (const auto& sh : shapes) {
        const double dy = y + 0.5 - sh.cy, dx = x + 0.5 - sh.cx;
        double inside;  // signed distance to the edge, positive inside
        if (sh.kind == 0) {
          inside = sh.a - std::hypot(dy, dx);
        } else {
          const double ca = std::cos(sh.angle), sa = std::sin(sh.angle);
          const double py = std::abs(-sa * dx + ca * dy), px = std::abs(ca * dx + sa * dy);
          inside = std::min(sh.a - px, sh.b - py);
        }
        const double alpha = sh.opacity / (1.0 + std::exp(-2.0 * inside));
        for (int c = 0; c < 3; ++c) v[c] = (1.0 - alpha) * v[c] + alpha * sh.col[c];
      }
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = static_cast<float>(std::clamp(v[c], 0.0, 1.0));
    }
  }
  return img;
}

}  // namespace tsanet
