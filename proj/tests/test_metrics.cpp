// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "test_util.hpp"
#include "tsanet/error.hpp"
#include "tsanet/metrics.hpp"
#include "tsanet/pnm.hpp"

using namespace tsanet;
using namespace tsanet::testing;

namespace {

std::vector<float> noise_plane(std::int64_t n, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  Rng rng(seed);
  std::vector<float> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = static_cast<float>(lo + (hi - lo) * uniform01(rng));
  return v;
}

// Direct per-window SSIM with the 2-D weights; no separable filtering.
double ssim_oracle(const std::vector<float>& a, const std::vector<float>& b, int h, int w) {
  const auto win = ssim_window();
  const double c1 = 1e-4, c2 = 9e-4;
  double total = 0;
  int count = 0;
  for (int y0 = 0; y0 + kSsimWindow <= h; ++y0)
    for (int x0 = 0; x0 + kSsimWindow <= w; ++x0) {
      double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
      for (int i = 0; i < kSsimWindow; ++i)
        for (int j = 0; j < kSsimWindow; ++j) {
          const double g = win[i * kSsimWindow + j];
          const double x = a[(y0 + i) * w + x0 + j], y = b[(y0 + i) * w + x0 + j];
          mx += g * x;
          my += g * y;
          sxx += g * x * x;
          syy += g * y * y;
          sxy += g * x * y;
        }
      const double vx = sxx - mx * mx, vy = syy - my * my, cxy = sxy - mx * my;
      total += (2 * mx * my + c1) * (2 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  return total / count;
}

}  // namespace

TEST_CASE("psnr examples") {
  std::vector<float> zero(16, 0.0f), half(16, 0.5f), tenth(16, 0.1f);
  CHECK(psnr({zero.data(), 4, 4, 1}, {half.data(), 4, 4, 1}) == doctest::Approx(6.0206).epsilon(1e-4));
  CHECK(psnr({zero.data(), 4, 4, 1}, {tenth.data(), 4, 4, 1}) == doctest::Approx(20.0).epsilon(1e-6));
  CHECK(psnr({half.data(), 4, 4, 1}, {half.data(), 4, 4, 1}) == kPsnrCap);
  CHECK(psnr({zero.data(), 2, 2, 4}, {tenth.data(), 2, 2, 4}, 255.0) == doctest::Approx(20.0 + 20 * std::log10(255.0)));
  CHECK_THROWS_AS(psnr({zero.data(), 4, 4, 1}, {half.data(), 2, 8, 1}), ShapeError);
}

TEST_CASE("psnr of a uniform shift is 20 log10(1/|c|)") {
  const auto a = noise_plane(64 * 3, 1);
  for (double c : {0.01, 0.05, -0.2}) {
    std::vector<float> b(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) b[i] = static_cast<float>(a[i] + c);
    CHECK(psnr({b.data(), 8, 8, 3}, {a.data(), 8, 8, 3}) == doctest::Approx(20 * std::log10(1 / std::abs(c))).epsilon(1e-4));
  }
}

TEST_CASE("ssim: identity, anti-correlation, symmetry") {
  const auto a = noise_plane(20 * 20, 2);
  const ImageView va{a.data(), 20, 20, 1};
  CHECK(ssim(va, va) == 1.0);
  std::vector<float> inv(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) inv[i] = 1.0f - a[i];
  const ImageView vi{inv.data(), 20, 20, 1};
  CHECK(ssim(va, vi) < 0.0);
  const auto b = noise_plane(20 * 20, 3);
  const ImageView vb{b.data(), 20, 20, 1};
  CHECK(ssim(va, vb) == doctest::Approx(ssim(vb, va)).epsilon(1e-12));
  std::vector<float> tiny(100, 0.5f);
  CHECK_THROWS_AS(ssim({tiny.data(), 10, 10, 1}, {tiny.data(), 10, 10, 1}), ValueError);
}

TEST_CASE("ssim window is a normalized separable Gaussian") {
  const auto w = ssim_window();
  double sum = 0;
  for (double v : w) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w[5 * 11 + 5] > w[5 * 11 + 4]);
  CHECK(w[0] == doctest::Approx(w[120]));
}

TEST_CASE("ssim matches a direct windowed oracle") {
  const auto a = noise_plane(16 * 16, 4);
  auto b = a;
  Rng rng(5);
  for (auto& v : b) v = static_cast<float>(0.7 * v + 0.3 * uniform01(rng));
  CHECK(ssim({a.data(), 16, 16, 1}, {b.data(), 16, 16, 1}) == doctest::Approx(ssim_oracle(a, b, 16, 16)).epsilon(1e-6));
}

TEST_CASE("ssim structure term ignores a common offset") {
  // The luminance term uses a fixed stabilizer, so only contrast-structure
  // is exactly invariant to adding the same constant to both images.
  const auto a = noise_plane(24 * 24, 6, 0.0, 0.5), b = noise_plane(24 * 24, 7, 0.0, 0.5);
  const auto base = ssim_parts({a.data(), 24, 24, 1}, {b.data(), 24, 24, 1});
  std::vector<float> as(a), bs(b);
  for (auto& v : as) v += 0.25f;
  for (auto& v : bs) v += 0.25f;
  const auto shifted = ssim_parts({as.data(), 24, 24, 1}, {bs.data(), 24, 24, 1});
  CHECK(shifted.cs == doctest::Approx(base.cs).epsilon(1e-5));
  // Identical pairs stay at 1 under any offset.
  CHECK(ssim({as.data(), 24, 24, 1}, {as.data(), 24, 24, 1}) == 1.0);
}

TEST_CASE("score_image protocols") {
  const auto t = procedural_image(32, 32, 1);
  auto p = t;
  for (std::int64_t x = 0; x < 32; ++x)
    for (int c = 0; c < 3; ++c) p.at(0, x, c) = 1.0f - p.at(0, x, c);  // damage the top row only
  EvalConfig e;
  const auto full = score_image(p, t, e);
  e.border_crop = 1;
  const auto cropped = score_image(p, t, e);
  CHECK(full.psnr < 100.0);
  CHECK(cropped.psnr == kPsnrCap);
  e.border_crop = 0;
  e.psnr_protocol = "luma";
  CHECK(score_image(p, t, e).psnr < 100.0);
  e.border_crop = 16;
  CHECK_THROWS_AS(score_image(p, t, e), ValueError);
}

TEST_CASE("dataset evaluation keeps going past bad files") {
  const auto dir = std::filesystem::temp_directory_path() / "tsanet_test_eval";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> paths;
  for (int i = 0; i < 2; ++i) {
    paths.push_back(dir / ("img" + std::to_string(i) + ".ppm"));
    save_image(procedural_image(34, 30, 20 + i), paths.back(), BitDepth::k16);
  }
  paths.insert(paths.begin() + 1, dir / "missing.ppm");
  write_file(dir / "broken.ppm", "P6\n4 4\n255\nxx");
  paths.push_back(dir / "broken.ppm");

  auto cfg = RunConfig::defaults();
  cfg.noise_sigma = 0.01;
  const auto r1 = eval_dataset(box_demosaicer(cfg.model.cfa), paths, cfg);
  REQUIRE(r1.rows.size() == 4);
  CHECK(r1.evaluated == 2);
  CHECK(r1.failed == 2);
  CHECK(r1.rows[1].error.find("missing.ppm") != std::string::npos);
  CHECK_FALSE(r1.rows[3].error.empty());
  CHECK(r1.mean_psnr == doctest::Approx((r1.rows[0].psnr + r1.rows[2].psnr) / 2));
  CHECK(r1.rows[0].psnr > 10.0);
  CHECK(r1.rows[0].psnr < 60.0);

  const auto r2 = eval_dataset(box_demosaicer(cfg.model.cfa), paths, cfg);
  CHECK(r1.to_csv() == r2.to_csv());
  const auto csv = r1.to_csv();
  CHECK(csv.starts_with("# config: "));
  CHECK(csv.find("\nname,psnr_db,ssim,error\n") != std::string::npos);
  CHECK(csv.find("\nmean,") != std::string::npos);
  CHECK(r1.summary()["failed"] == 2);
  std::filesystem::remove_all(dir);
}
