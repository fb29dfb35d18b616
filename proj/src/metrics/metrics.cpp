// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include "tsanet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "tsanet/pnm.hpp"
#include "tsanet/rng.hpp"

namespace tsanet {

ImageView view(const RgbImage& img) { return {img.data.data(), img.height, img.width, 3}; }
ImageView view(const RawImage& img) { return {img.data.data(), img.height, img.width, 1}; }

namespace {

void require_same(const char* op, ImageView a, ImageView b) {
  if (a.height != b.height || a.width != b.width || a.channels != b.channels) {
    throw ShapeError(op, Shape{a.height, a.width, a.channels}, Shape{b.height, b.width, b.channels});
  }
}

std::vector<double> gaussian_1d() {
  std::vector<double> g(kSsimWindow);
  double sum = 0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - kSsimWindow / 2;
    g[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    sum += g[i];
  }
  for (auto& v : g) v /= sum;
  return g;
}

// Valid-region correlation with the separable window: rows, then columns.
std::vector<double> filter_valid(const std::vector<double>& x, std::int64_t h, std::int64_t w,
                                 const std::vector<double>& g) {
  const std::int64_t k = kSsimWindow, oh = h - k + 1, ow = w - k + 1;
  std::vector<double> rows(static_cast<std::size_t>(h * ow));
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t xo = 0; xo < ow; ++xo) {
      double acc = 0;
      for (std::int64_t i = 0; i < k; ++i) acc += g[i] * x[y * w + xo + i];
      rows[y * ow + xo] = acc;
    }
  std::vector<double> out(static_cast<std::size_t>(oh * ow));
  for (std::int64_t yo = 0; yo < oh; ++yo)
    for (std::int64_t xo = 0; xo < ow; ++xo) {
      double acc = 0;
      for (std::int64_t i = 0; i < k; ++i) acc += g[i] * rows[(yo + i) * ow + xo];
      out[yo * ow + xo] = acc;
    }
  return out;
}

}  // namespace

double psnr(ImageView pred, ImageView target, double max_val) {
  require_same("psnr", pred, target);
  const auto n = pred.height * pred.width * pred.channels;
  if (n == 0) throw ValueError("psnr: empty image");
  double se = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(pred.data[i]) - target.data[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(n);
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(max_val * max_val / mse));
}

std::vector<double> ssim_window() {
  const auto g = gaussian_1d();
  std::vector<double> w(kSsimWindow * kSsimWindow);
  for (int y = 0; y < kSsimWindow; ++y)
    for (int x = 0; x < kSsimWindow; ++x) w[y * kSsimWindow + x] = g[y] * g[x];
  return w;
}

SsimParts ssim_parts(ImageView a, ImageView b) {
  require_same("ssim", a, b);
  if (a.height < kSsimWindow || a.width < kSsimWindow) {
    throw ValueError("ssim: image " + std::to_string(a.height) + "x" + std::to_string(a.width) +
                     " is smaller than the 11x11 window");
  }
  const double c1 = kSsimK1 * kSsimK1, c2 = kSsimK2 * kSsimK2;
  const auto g = gaussian_1d();
  const auto h = a.height, w = a.width, ch = a.channels;
  const auto np = static_cast<std::size_t>(h * w);
  SsimParts total;
  for (std::int64_t c = 0; c < ch; ++c) {
    std::vector<double> x(np), y(np), xx(np), yy(np), xy(np);
    for (std::size_t i = 0; i < np; ++i) {
      x[i] = a.data[i * ch + c];
      y[i] = b.data[i * ch + c];
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = filter_valid(x, h, w, g), my = filter_valid(y, h, w, g);
    const auto sxx = filter_valid(xx, h, w, g), syy = filter_valid(yy, h, w, g), sxy = filter_valid(xy, h, w, g);
    double s_sum = 0, cs_sum = 0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double vx = sxx[i] - mx[i] * mx[i], vy = syy[i] - my[i] * my[i], cxy = sxy[i] - mx[i] * my[i];
      const double cs = (2.0 * cxy + c2) / (vx + vy + c2);
      const double lum = (2.0 * mx[i] * my[i] + c1) / (mx[i] * mx[i] + my[i] * my[i] + c1);
      s_sum += lum * cs;
      cs_sum += cs;
    }
    total.ssim += s_sum / static_cast<double>(mx.size());
    total.cs += cs_sum / static_cast<double>(mx.size());
  }
  total.ssim /= static_cast<double>(ch);
  total.cs /= static_cast<double>(ch);
  return total;
}

EvalRow score_image(const RgbImage& pred, const RgbImage& target, const EvalConfig& eval) {
  if (pred.height != target.height || pred.width != target.width) {
    throw ShapeError("score_image", Shape{pred.height, pred.width}, Shape{target.height, target.width});
  }
  const auto b = eval.border_crop;
  const auto h = pred.height - 2 * b, w = pred.width - 2 * b;
  if (h <= 0 || w <= 0) throw ValueError("score_image: border crop leaves no pixels");
  const bool luma = eval.psnr_protocol == "luma";
  const int ch = luma ? 1 : 3;
  std::vector<float> p(static_cast<std::size_t>(h * w * ch)), t(p.size());
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < w; ++x) {
      const auto o = static_cast<std::size_t>((y * w + x) * ch);
      if (luma) {
        auto lum = [&](const RgbImage& im) {
          return 0.299f * im.at(y + b, x + b, 0) + 0.587f * im.at(y + b, x + b, 1) + 0.114f * im.at(y + b, x + b, 2);
        };
        p[o] = lum(pred);
        t[o] = lum(target);
      } else {
        for (int c = 0; c < 3; ++c) {
          p[o + c] = pred.at(y + b, x + b, c);
          t[o + c] = target.at(y + b, x + b, c);
        }
      }
    }
  const ImageView pv{p.data(), h, w, ch}, tv{t.data(), h, w, ch};
  EvalRow row;
  row.psnr = psnr(pv, tv, eval.max_val);
  row.ssim = ssim(pv, tv);
  return row;
}

Demosaicer network_demosaicer(const TsaNet<float>& net) {
  return [&net](const Sample& s) {
    NoGradGuard guard;
    auto img = to_rgb_image(net.forward(make_inputs<float>({s})));
    for (auto& v : img.data) v = std::clamp(v, 0.0f, 1.0f);
    return img;
  };
}

Demosaicer box_demosaicer(const CfaSpec& spec) {
  return [spec](const Sample& s) { return box_demosaic(s.degraded, spec); };
}

EvalReport eval_dataset(const Demosaicer& model, const std::vector<std::filesystem::path>& images,
                        const RunConfig& config) {
  EvalReport r;
  r.config = config.to_json();
  double psum = 0, ssum = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    EvalRow row;
    row.name = images[i].filename().string();
    try {
      RgbImage img = load_rgb(images[i]);
      // Keep the CFA lattice: drop partial tiles at the bottom/right.
      img = crop_rgb(img, 0, 0, img.height / 4 * 4, img.width / 4 * 4);
      const auto seed = derive_seed(config.seed, {config.eval.seed_offset + i});
      const Sample s = synthesize_sample(img, config.model.cfa, config.noise_sigma, seed);
      const auto scored = score_image(model(s), s.rgb, config.eval);
      row.psnr = scored.psnr;
      row.ssim = scored.ssim;
      psum += row.psnr;
      ssum += row.ssim;
      ++r.evaluated;
    } catch (const Error& e) {
      row.error = e.what();
      row.psnr = row.ssim = std::nan("");
      ++r.failed;
    }
    r.rows.push_back(std::move(row));
  }
  if (r.evaluated > 0) {
    r.mean_psnr = psum / static_cast<double>(r.evaluated);
    r.mean_ssim = ssum / static_cast<double>(r.evaluated);
  }
  return r;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

std::string num(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string EvalReport::to_csv() const {
  std::ostringstream out;
  out << "# config: " << config.dump() << "\n";
  out << "name,psnr_db,ssim,error\n";
  for (const auto& r : rows) out << csv_field(r.name) << "," << num(r.psnr) << "," << num(r.ssim) << "," << csv_field(r.error) << "\n";
  out << "mean," << num(mean_psnr) << "," << num(mean_ssim) << ",\n";
  return out.str();
}

nlohmann::json EvalReport::summary() const {
  nlohmann::json rows_j = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json j = {{"name", r.name}};
    if (r.error.empty()) {
      j["psnr_db"] = r.psnr;
      j["ssim"] = r.ssim;
    } else {
      j["error"] = r.error;
    }
    rows_j.push_back(j);
  }
  return {{"config", config},      {"rows", rows_j},       {"mean_psnr_db", mean_psnr},
          {"mean_ssim", mean_ssim}, {"evaluated", evaluated}, {"failed", failed}};
}

}  // namespace tsanet
