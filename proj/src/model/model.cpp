// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include "tsanet/model.hpp"

#include <numeric>

#include "tsanet/cost.hpp"

namespace tsanet {

using namespace ops;

ModelConfig ModelConfig::preset(const std::string& variant) {
  ModelConfig c;
  c.variant = variant;
  if (variant == "toy") {
    c.q2q = {{8, 16, 32}, 2};
    c.q2r = {{8, 16, 32}, 2};
    c.dims.window = 4;
    c.dims.heads = 2;
    c.dims.state = 4;
    c.dims.expand = 1;
  } else if (variant == "s") {
    c.q2q = {{16, 32, 64}, 2};
    c.q2r = {{24, 48, 96}, 2};
    c.dims.heads = 2;
  } else if (variant == "m") {
    c.q2q = {{20, 40, 80}, 2};
    c.q2r = {{36, 72, 144}, 3};
    c.dims.heads = 4;
  } else if (variant == "l") {
    c.q2q = {{20, 40, 80}, 2};
    c.q2r = {{48, 96, 192}, 4};
    c.dims.heads = 4;
  } else {
    throw ConfigError("unknown model variant '" + variant + "' (expected toy, s, m or l)");
  }
  return c;
}

std::int64_t ModelConfig::pad_multiple() const {
  return std::lcm(dims.window * (std::int64_t{1} << (levels() - 1)), std::int64_t{4});
}

void ModelConfig::validate() const {
  if (q2r.widths.empty() || q2r.widths.size() != q2q.widths.size()) {
    throw ConfigError("model: q2q and q2r need the same nonzero number of levels");
  }
  for (const auto* st : {&q2q, &q2r}) {
    if (st->blocks < 1) throw ConfigError("model: blocks per level must be >= 1");
    for (auto w : st->widths)
      if (w <= 0 || w % 2) throw ConfigError("model: channel widths must be positive and even, got " + std::to_string(w));
  }
  if (dims.window < 2 || dims.window % 2) throw ConfigError("model: window must be even and >= 2");
  if (dims.heads < 1 || dims.mlp_ratio < 1 || dims.expand < 1 || dims.state < 1) {
    throw ConfigError("model: heads, mlp_ratio, expand and state must be >= 1");
  }
  if (ffm_frequencies < 1) throw ConfigError("model: ffm frequencies must be >= 1");
  if (!(ffm_input_scale > 0.0)) throw ConfigError("model: ffm input scale must be > 0");
  cfa.validate();
}

// ---- tensors <-> images ----

template <typename T>
Tensor<T> raw_tensor(const std::vector<const RawImage*>& raws) {
  const auto h = raws.at(0)->height, w = raws.at(0)->width;
  std::vector<T> data;
  data.reserve(raws.size() * static_cast<std::size_t>(h * w));
  for (const auto* r : raws) {
    if (r->height != h || r->width != w) throw ShapeError("raw_tensor", Shape{h, w}, Shape{r->height, r->width});
    data.insert(data.end(), r->data.begin(), r->data.end());
  }
  return Tensor<T>::from_data({static_cast<std::int64_t>(raws.size()), h, w, 1}, std::move(data));
}

template <typename T>
Tensor<T> rgb_tensor(const std::vector<const RgbImage*>& images) {
  const auto h = images.at(0)->height, w = images.at(0)->width;
  std::vector<T> data;
  for (const auto* im : images) {
    if (im->height != h || im->width != w) throw ShapeError("rgb_tensor", Shape{h, w}, Shape{im->height, im->width});
    data.insert(data.end(), im->data.begin(), im->data.end());
  }
  return Tensor<T>::from_data({static_cast<std::int64_t>(images.size()), h, w, 3}, std::move(data));
}

template <typename T>
NetInputs<T> make_inputs(const std::vector<Sample>& batch) {
  std::vector<const RawImage*> raws;
  std::vector<T> pq, pe;
  for (const auto& s : batch) {
    raws.push_back(&s.inpainted);
    pq.insert(pq.end(), s.maps.pq.begin(), s.maps.pq.end());
    pe.insert(pe.end(), s.maps.pe.begin(), s.maps.pe.end());
  }
  const auto b = static_cast<std::int64_t>(batch.size());
  const auto h = batch.at(0).inpainted.height, w = batch.at(0).inpainted.width;
  return {raw_tensor<T>(raws), Tensor<T>::from_data({b, h, w, 3}, std::move(pq)),
          Tensor<T>::from_data({b, h, w, 1}, std::move(pe))};
}

template <typename T>
NetTargets<T> make_targets(const std::vector<Sample>& batch) {
  std::vector<const RawImage*> clean;
  std::vector<const RgbImage*> rgb;
  for (const auto& s : batch) {
    clean.push_back(&s.clean);
    rgb.push_back(&s.rgb);
  }
  return {raw_tensor<T>(clean), rgb_tensor<T>(rgb)};
}

RgbImage to_rgb_image(const Tensor<float>& t, std::int64_t index) {
  if (t.rank() != 4 || t.dim(3) != 3) throw ShapeError("to_rgb_image", t.shape(), Shape{-1, -1, -1, 3});
  RgbImage img(t.dim(1), t.dim(2));
  const auto n = static_cast<std::size_t>(img.height * img.width * 3);
  const auto d = t.data();
  std::copy(d.begin() + static_cast<std::ptrdiff_t>(index * n), d.begin() + static_cast<std::ptrdiff_t>((index + 1) * n), img.data.begin());
  return img;
}

RawImage to_raw_image(const Tensor<float>& t, std::int64_t index) {
  if (t.rank() != 4 || t.dim(3) != 1) throw ShapeError("to_raw_image", t.shape(), Shape{-1, -1, -1, 1});
  RawImage img(t.dim(1), t.dim(2));
  const auto n = static_cast<std::size_t>(img.height * img.width);
  const auto d = t.data();
  std::copy(d.begin() + static_cast<std::ptrdiff_t>(index * n), d.begin() + static_cast<std::ptrdiff_t>((index + 1) * n), img.data.begin());
  return img;
}

// ---- U-Net ----

template <typename T>
UNet<T>::UNet(ParamStore<T>& store, const std::string& path, StageKind kind,
              const ModelConfig& config)
    : kind_(kind),
      ffm_(config.toggles.ffm),
      ffm_frequencies_(config.ffm_frequencies),
      ffm_scale_(config.ffm_input_scale) {
  const bool q2q = kind == StageKind::kQ2Q;
  const auto& stage = q2q ? config.q2q : config.q2r;
  const auto& w = stage.widths;
  const auto n_levels = static_cast<std::int64_t>(w.size());
  const std::int64_t in_ch = q2q ? 2 : 1, out_ch = q2q ? 1 : 3;
  const std::int64_t map_ch = q2q ? 4 : 3;
  uses_position_ = q2q ? config.toggles.spa : config.toggles.qcsa;
  const auto scan = config.toggles.rvss ? ScanBranch::kRvss : ScanBranch::kConv;

  stem_ = Conv3<T>(store, join_path(path, "stem"), in_ch, w[0]);
  if (uses_position_) {
    const auto pos_in = ffm_ ? map_ch * 2 * ffm_frequencies_ : map_ch;
    pos_stem_ = Linear<T>(store, join_path(path, "pos_stem"), pos_in, w[0]);
  }
  levels_.resize(static_cast<std::size_t>(n_levels));
  for (std::int64_t l = 0; l < n_levels; ++l) {
    auto& lv = levels_[static_cast<std::size_t>(l)];
    const auto enc = join_path(path, "enc" + std::to_string(l));
    if (l > 0) {
      lv.down = Linear<T>(store, join_path(enc, "down"), 4 * w[l - 1], w[l]);
      if (uses_position_) lv.pos_down = Linear<T>(store, join_path(enc, "pos_down"), 4 * w[l - 1], w[l]);
    }
    BlockDims dims = config.dims;
    dims.heads = std::gcd(config.dims.heads, w[l] / 2);
    if (q2q) lv.spa = Spa<T>(store, join_path(enc, "spa"), w[l], w[l], config.toggles.spa);
    for (std::int64_t b = 0; b < stage.blocks; ++b) {
      const auto bp = join_path(enc, "block" + std::to_string(b));
      AttnBranch attn = AttnBranch::kConv;
      if (!q2q) attn = config.toggles.qcsa ? AttnBranch::kCross : AttnBranch::kSelf;
      const auto shift = (b % 2) * (dims.window / 2);
      lv.encoder.emplace_back(store, bp, w[l], w[l], dims, attn, scan, shift);
    }
  }
  for (std::int64_t l = n_levels - 2; l >= 0; --l) {
    auto& lv = levels_[static_cast<std::size_t>(l)];
    const auto dec = join_path(path, "dec" + std::to_string(l));
    lv.up = Linear<T>(store, join_path(dec, "up"), w[l + 1], 4 * w[l]);
    lv.fuse = Linear<T>(store, join_path(dec, "fuse"), 2 * w[l], w[l]);
    for (std::int64_t b = 0; b < stage.blocks; ++b) {
      lv.decoder.emplace_back(store, join_path(dec, "block" + std::to_string(b)), w[l], 0,
                              config.dims, AttnBranch::kConv, scan, 0);
    }
  }
  head_ = Conv3<T>(store, join_path(path, "head"), w[0], out_ch, Init::kZeros);
}

template <typename T>
Tensor<T> UNet<T>::operator()(const Tensor<T>& image, const Tensor<T>& pos_maps) const {
  Tensor<T> x, pos;
  {
    CostScope scope("stem");
    x = stem_(image);
  }
  if (uses_position_) {
    CostScope scope("pos");
    pos = ffm_ ? fourier_features(scale(pos_maps, static_cast<T>(ffm_scale_)), ffm_frequencies_) : pos_maps;
    pos = pos_stem_(pos);
  }
  const auto n_levels = levels_.size();
  std::vector<Tensor<T>> skips;
  for (std::size_t l = 0; l < n_levels; ++l) {
    CostScope scope("enc" + std::to_string(l));
    const auto& lv = levels_[l];
    if (l > 0) {
      x = lv.down(pixel_unshuffle(x));
      if (uses_position_) pos = lv.pos_down(pixel_unshuffle(pos));
    }
    if (kind_ == StageKind::kQ2Q) x = lv.spa(x, pos);
    for (const auto& blk : lv.encoder) x = blk(x, pos);
    if (l + 1 < n_levels) skips.push_back(x);
  }
  for (std::size_t l = n_levels - 1; l-- > 0;) {
    CostScope scope("dec" + std::to_string(l));
    const auto& lv = levels_[l];
    x = pixel_shuffle(lv.up(x));
    x = lv.fuse(concat_channels<T>({x, skips[l]}));
    for (const auto& blk : lv.decoder) x = blk(x);
  }
  CostScope scope("head");
  return head_(x);
}

// ---- TsaNet ----

template <typename T>
TsaNet<T>::TsaNet(const ModelConfig& config) : config_(config), params_(config.seed) {
  config_.validate();
  q2q_ = UNet<T>(params_, "q2q", StageKind::kQ2Q, config_);
  q2r_ = UNet<T>(params_, "q2r", StageKind::kQ2R, config_);
}

namespace {

template <typename T>
Tensor<T> pad_to(const Tensor<T>& x, std::int64_t multiple) {
  const auto h = x.dim(1), w = x.dim(2);
  const auto ph = (multiple - h % multiple) % multiple, pw = (multiple - w % multiple) % multiple;
  if (ph == 0 && pw == 0) return x;
  return pad(x, 0, ph, 0, pw, PadMode::kReflect);
}

template <typename T>
Tensor<T> crop_to(const Tensor<T>& x, std::int64_t h, std::int64_t w) {
  if (x.dim(1) == h && x.dim(2) == w) return x;
  return crop(x, 0, 0, h, w);
}

template <typename T>
void require_maps(const char* op, const Tensor<T>& image, const Tensor<T>& maps, std::int64_t ch) {
  if (maps.rank() != 4 || maps.dim(0) != image.dim(0) || maps.dim(1) != image.dim(1) ||
      maps.dim(2) != image.dim(2) || maps.dim(3) != ch) {
    throw ShapeError(op, image.shape(), maps.shape(), "position map does not match the raw frame");
  }
}

// Q2R residual base: each output channel is the 5x5 tent-weighted mean of
// the raw samples of that color (two fixed 3x3 box passes), so the head
// learns a correction to an interpolated image rather than the raw itself.
template <typename T>
Tensor<T> color_interp(const Tensor<T>& raw, const Tensor<T>& pq) {
  std::vector<T> wd(81, T(0));
  for (int k = 0; k < 9; ++k)
    for (int c = 0; c < 3; ++c) wd[static_cast<std::size_t>((k * 3 + c) * 3 + c)] = T(1);
  const auto w = Tensor<T>::from_data({3, 3, 3, 3}, std::move(wd));
  auto tent = [&](const Tensor<T>& t) { return conv3x3(conv3x3(t, w), w); };
  Tensor<T> inv;
  {
    NoGradGuard guard;
    const auto den = tent(pq);
    std::vector<T> d(den.data().begin(), den.data().end());
    for (auto& v : d) v = v > T(0) ? T(1) / v : T(0);
    inv = Tensor<T>::from_data(den.shape(), std::move(d));
  }
  return mul(tent(mul(concat_channels<T>({raw, raw, raw}), pq)), inv);
}

}  // namespace

template <typename T>
Tensor<T> TsaNet<T>::forward_q2q(const Tensor<T>& inpainted, const Tensor<T>& pq,
                                 const Tensor<T>& pe) const {
  if (inpainted.rank() != 4 || inpainted.dim(3) != 1) {
    throw ShapeError("forward_q2q", inpainted.shape(), Shape{-1, -1, -1, 1}, "raw must be [B,H,W,1]");
  }
  require_maps("forward_q2q", inpainted, pq, 3);
  require_maps("forward_q2q", inpainted, pe, 1);
  CostScope scope("q2q");
  const auto h = inpainted.dim(1), w = inpainted.dim(2), m = config_.pad_multiple();
  const auto raw = pad_to(inpainted, m);
  const auto flags = pad_to(pe, m);
  const auto maps = q2q_.uses_position() ? concat_channels<T>({pad_to(pq, m), flags}) : Tensor<T>{};
  const auto y = add(q2q_(concat_channels<T>({raw, flags}), maps), raw);
  return crop_to(y, h, w);
}

template <typename T>
Tensor<T> TsaNet<T>::forward_q2r(const Tensor<T>& clean, const Tensor<T>& pq) const {
  if (clean.rank() != 4 || clean.dim(3) != 1) {
    throw ShapeError("forward_q2r", clean.shape(), Shape{-1, -1, -1, 1}, "raw must be [B,H,W,1]");
  }
  require_maps("forward_q2r", clean, pq, 3);
  CostScope scope("q2r");
  const auto h = clean.dim(1), w = clean.dim(2), m = config_.pad_multiple();
  const auto raw = pad_to(clean, m);
  const auto pq_pad = pad_to(pq, m);
  const auto maps = q2r_.uses_position() ? pq_pad : Tensor<T>{};
  Tensor<T> base;
  {
    CostScope base_scope("base");
    base = color_interp(raw, pq_pad);
  }
  const auto y = add(q2r_(raw, maps), base);
  return crop_to(y, h, w);
}

template <typename T>
CostReport count_params(const TsaNet<T>& net) {
  CostReport r;
  r.params_q2q = net.params().count("q2q.");
  r.params_q2r = net.params().count("q2r.");
  r.params_total = net.params().count();
  return r;
}

template <typename T>
CostReport count_flops(const TsaNet<T>& net, std::int64_t height, std::int64_t width) {
  CostReport r = count_params(net);
  r.height = height;
  r.width = width;
  NoGradGuard guard;
  CostCounter counter;
  const auto raw = Tensor<T>::zeros({1, height, width, 1});
  net.forward(NetInputs<T>{raw, Tensor<T>::zeros({1, height, width, 3}), Tensor<T>::zeros({1, height, width, 1})});
  r.flops_q2q = 2 * counter.macs_under("q2q");
  r.flops_q2r = 2 * counter.macs_under("q2r");
  r.flops_total = 2 * counter.total_macs();
  r.macs_by_path = counter.by_path();
  return r;
}

template <typename T, typename U>
void copy_params(const TsaNet<T>& from, TsaNet<U>& to) {
  for (const auto& e : to.params().entries()) {
    const auto src = from.params().at(e.name);
    if (src.shape() != e.value.shape()) throw ShapeError("copy_params", src.shape(), e.value.shape(), e.name);
    Tensor<U> dst = e.value;
    auto d = dst.data();
    const auto s = src.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<U>(s[i]);
  }
}

#define TSANET_MODEL(T)                                                            \
  template class UNet<T>;                                                          \
  template class TsaNet<T>;                                                        \
  template NetInputs<T> make_inputs<T>(const std::vector<Sample>&);               \
  template NetTargets<T> make_targets<T>(const std::vector<Sample>&);             \
  template Tensor<T> raw_tensor<T>(const std::vector<const RawImage*>&);          \
  template Tensor<T> rgb_tensor<T>(const std::vector<const RgbImage*>&);          \
  template CostReport count_params(const TsaNet<T>&);                              \
  template CostReport count_flops(const TsaNet<T>&, std::int64_t, std::int64_t);

TSANET_MODEL(float)
TSANET_MODEL(double)

template void copy_params(const TsaNet<float>&, TsaNet<float>&);
template void copy_params(const TsaNet<float>&, TsaNet<double>&);
template void copy_params(const TsaNet<double>&, TsaNet<float>&);
template void copy_params(const TsaNet<double>&, TsaNet<double>&);

}  // namespace tsanet
