// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include "tsanet/config.hpp"

#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "tsanet/pnm.hpp"

namespace tsanet {

using nlohmann::json;

namespace {

// Reads keys from one JSON object and remembers which were seen, so the
// leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + "must be a JSON object");
  }

  template <typename V>
  void get(const char* key, V& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<V>();
    } catch (const json::exception&) {
      throw ConfigError("config key " + full(key) + " has the wrong type (got " + it->dump() + ")");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }

  Section sub(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return Section(it == j_.end() ? empty() : *it, full(key));
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError("unknown config key " + full(k.c_str()));
  }

 private:
  static const json& empty() {
    static const json e = json::object();
    return e;
  }
  std::string full(const char* key) const { return path_.empty() ? key : path_ + "." + key; }
  std::string where() const { return path_.empty() ? "config: " : "config key " + path_ + " "; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::vector<std::string> tile_rows(const CfaSpec& s) {
  std::vector<std::string> rows;
  for (const auto& r : s.tile) {
    std::string row;
    for (auto c : r) row += color_letter(c);
    rows.push_back(row);
  }
  return rows;
}

std::vector<std::string> mask_rows(const CfaSpec& s) {
  std::vector<std::string> rows;
  for (const auto& r : s.event_mask) {
    std::string row;
    for (auto v : r) row += static_cast<char>('0' + v);
    rows.push_back(row);
  }
  return rows;
}

void parse_grid(const std::vector<std::string>& rows, const char* key,
                const std::function<void(int, int, char)>& set) {
  if (rows.size() != 4) throw ConfigError(std::string("config key cfa.") + key + " needs 4 rows");
  for (int y = 0; y < 4; ++y) {
    if (rows[y].size() != 4) throw ConfigError(std::string("config key cfa.") + key + " rows need 4 entries");
    for (int x = 0; x < 4; ++x) set(y, x, rows[y][x]);
  }
}

}  // namespace

RunConfig RunConfig::defaults() {
  RunConfig c;
  c.train.patch_size = 128;
  c.train.batch_size = 4;
  c.train.iterations = 40;
  return c;
}

json RunConfig::to_json() const {
  const auto& m = model;
  return {
      {"version", version},
      {"seed", seed},
      {"cfa",
       {{"tile", tile_rows(m.cfa)},
        {"event_mask", mask_rows(m.cfa)},
        {"version", m.cfa.version},
        {"noise_sigma", noise_sigma}}},
      {"model",
       {{"variant", m.variant},
        {"q2q_widths", m.q2q.widths},
        {"q2q_blocks", m.q2q.blocks},
        {"q2r_widths", m.q2r.widths},
        {"q2r_blocks", m.q2r.blocks},
        {"heads", m.dims.heads},
        {"window", m.dims.window},
        {"mlp_ratio", m.dims.mlp_ratio},
        {"expand", m.dims.expand},
        {"state", m.dims.state},
        {"ffm_frequencies", m.ffm_frequencies},
        {"ffm_input_scale", m.ffm_input_scale},
        {"toggles",
         {{"qcsa", m.toggles.qcsa}, {"spa", m.toggles.spa}, {"rvss", m.toggles.rvss}, {"ffm", m.toggles.ffm}}}}},
      {"train",
       {{"patch_size", train.patch_size},
        {"batch_size", train.batch_size},
        {"iterations", train.iterations},
        {"split", train.split},
        {"lr_start", train.lr_start},
        {"lr_end", train.lr_end},
        {"beta1", train.beta1},
        {"beta2", train.beta2},
        {"adam_eps", train.adam_eps},
        {"charbonnier_eps", train.charbonnier_eps},
        {"clip_norm", train.clip_norm},
        {"freeze", train.freeze},
        {"loss_mode", loss_mode_name(train.loss_mode)},
        {"log_every", train.log_every},
        {"from_scratch", train_from_scratch}}},
      {"eval",
       {{"psnr_protocol", eval.psnr_protocol},
        {"border_crop", eval.border_crop},
        {"max_val", eval.max_val},
        {"seed_offset", eval.seed_offset}}},
      {"io",
       {{"manifest", io.manifest},
        {"out_dir", io.out_dir},
        {"checkpoint_dir", io.checkpoint_dir},
        {"bit_depth", io.bit_depth},
        {"procedural_images", io.procedural_images},
        {"procedural_size", io.procedural_size}}},
  };
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c = defaults();
  Section root(j, "");
  if (!root.has("version")) throw ConfigError("config key version is mandatory");
  root.get("version", c.version);
  if (c.version != kConfigVersion) {
    throw ConfigError("config version " + std::to_string(c.version) + " is not supported (expected " +
                      std::to_string(kConfigVersion) + ")");
  }
  root.get("seed", c.seed);

  // The variant picks the model defaults before any explicit key applies.
  auto ms = root.sub("model");
  std::string variant = c.model.variant;
  ms.get("variant", variant);
  c.model = ModelConfig::preset(variant);

  {
    auto s = root.sub("cfa");
    std::vector<std::string> tile = tile_rows(c.model.cfa), mask = mask_rows(c.model.cfa);
    s.get("tile", tile);
    s.get("event_mask", mask);
    s.get("version", c.model.cfa.version);
    s.get("noise_sigma", c.noise_sigma);
    s.finish();
    parse_grid(tile, "tile", [&](int y, int x, char v) { c.model.cfa.tile[y][x] = color_from_letter(v); });
    parse_grid(mask, "event_mask", [&](int y, int x, char v) {
      if (v != '0' && v != '1') throw ConfigError("config key cfa.event_mask entries must be 0 or 1");
      c.model.cfa.event_mask[y][x] = static_cast<std::uint8_t>(v - '0');
    });
  }
  {
    auto& m = c.model;
    ms.get("q2q_widths", m.q2q.widths);
    ms.get("q2q_blocks", m.q2q.blocks);
    ms.get("q2r_widths", m.q2r.widths);
    ms.get("q2r_blocks", m.q2r.blocks);
    ms.get("heads", m.dims.heads);
    ms.get("window", m.dims.window);
    ms.get("mlp_ratio", m.dims.mlp_ratio);
    ms.get("expand", m.dims.expand);
    ms.get("state", m.dims.state);
    ms.get("ffm_frequencies", m.ffm_frequencies);
    ms.get("ffm_input_scale", m.ffm_input_scale);
    auto ts = ms.sub("toggles");
    ts.get("qcsa", m.toggles.qcsa);
    ts.get("spa", m.toggles.spa);
    ts.get("rvss", m.toggles.rvss);
    ts.get("ffm", m.toggles.ffm);
    ts.finish();
    ms.finish();
  }
  {
    auto s = root.sub("train");
    auto& t = c.train;
    std::string mode = loss_mode_name(t.loss_mode);
    s.get("patch_size", t.patch_size);
    s.get("batch_size", t.batch_size);
    s.get("iterations", t.iterations);
    s.get("split", t.split);
    s.get("lr_start", t.lr_start);
    s.get("lr_end", t.lr_end);
    s.get("beta1", t.beta1);
    s.get("beta2", t.beta2);
    s.get("adam_eps", t.adam_eps);
    s.get("charbonnier_eps", t.charbonnier_eps);
    s.get("clip_norm", t.clip_norm);
    s.get("freeze", t.freeze);
    s.get("loss_mode", mode);
    s.get("log_every", t.log_every);
    s.get("from_scratch", c.train_from_scratch);
    s.finish();
    t.loss_mode = parse_loss_mode(mode);
  }
  {
    auto s = root.sub("eval");
    s.get("psnr_protocol", c.eval.psnr_protocol);
    s.get("border_crop", c.eval.border_crop);
    s.get("max_val", c.eval.max_val);
    s.get("seed_offset", c.eval.seed_offset);
    s.finish();
  }
  {
    auto s = root.sub("io");
    s.get("manifest", c.io.manifest);
    s.get("out_dir", c.io.out_dir);
    s.get("checkpoint_dir", c.io.checkpoint_dir);
    s.get("bit_depth", c.io.bit_depth);
    s.get("procedural_images", c.io.procedural_images);
    s.get("procedural_size", c.io.procedural_size);
    s.finish();
  }
  root.finish();
  c.model.seed = c.seed;
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const FormatError& e) {
    throw ConfigError(e.what());
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": not valid JSON: " + e.what());
  }
  return from_json(j);
}

void RunConfig::validate() const {
  model.validate();
  train.validate();
  if (!(noise_sigma >= 0.0)) throw ConfigError("cfa.noise_sigma must be >= 0");
  if (eval.psnr_protocol != "rgb" && eval.psnr_protocol != "luma") {
    throw ConfigError("eval.psnr_protocol must be rgb or luma");
  }
  if (eval.border_crop < 0) throw ConfigError("eval.border_crop must be >= 0");
  if (!(eval.max_val > 0.0)) throw ConfigError("eval.max_val must be > 0");
  if (io.bit_depth != 8 && io.bit_depth != 16) throw ConfigError("io.bit_depth must be 8 or 16");
  if (io.procedural_images < 1) throw ConfigError("io.procedural_images must be >= 1");
  if (io.procedural_size < train.patch_size || io.procedural_size % 4) {
    throw ConfigError("io.procedural_size must be a multiple of 4 and >= train.patch_size");
  }
}

std::string config_reference() {
  static const std::vector<std::pair<std::string, std::string>> docs = {
      {"version", "config format version (mandatory)"},
      {"seed", "root seed: init, data order, noise"},
      {"cfa.tile", "4x4 color tile, rows of R/G/B"},
      {"cfa.event_mask", "4x4 event-pixel mask, rows of 0/1"},
      {"cfa.version", "tag recorded with the layout"},
      {"cfa.noise_sigma", "Gaussian read-noise std on the raw"},
      {"model.variant", "toy | s | m | l; sets every model default below"},
      {"model.q2q_widths", "Q2Q channels per U-Net level"},
      {"model.q2q_blocks", "Q2Q blocks per level"},
      {"model.q2r_widths", "Q2R channels per U-Net level"},
      {"model.q2r_blocks", "Q2R blocks per level"},
      {"model.heads", "attention heads h"},
      {"model.window", "attention window M"},
      {"model.mlp_ratio", "QCSA MLP ratio r"},
      {"model.expand", "RVSS expansion E"},
      {"model.state", "SSM state size N"},
      {"model.ffm_frequencies", "FFM frequency count L"},
      {"model.ffm_input_scale", "position maps are scaled by this before FFM"},
      {"model.toggles.qcsa", "off: shifted-window self-attention"},
      {"model.toggles.spa", "off: plain 1x1 conv on the image path"},
      {"model.toggles.rvss", "off: residual conv"},
      {"model.toggles.ffm", "off: raw position maps"},
      {"train.patch_size", "training crop size"},
      {"train.batch_size", "patches per step"},
      {"train.iterations", "total steps over the three phases"},
      {"train.split", "fractions for pretrain_q2q, pretrain_q2r, joint"},
      {"train.lr_start", "cosine schedule start"},
      {"train.lr_end", "cosine schedule end"},
      {"train.beta1", "Adam beta1"},
      {"train.beta2", "Adam beta2"},
      {"train.adam_eps", "Adam epsilon"},
      {"train.charbonnier_eps", "Charbonnier epsilon"},
      {"train.clip_norm", "global gradient-norm clip"},
      {"train.freeze", "parameter name prefixes excluded from updates"},
      {"train.loss_mode", "joint loss: final_only | dual"},
      {"train.log_every", "CSV log stride"},
      {"train.from_scratch", "joint phase without pretrained stages"},
      {"eval.psnr_protocol", "rgb | luma"},
      {"eval.border_crop", "pixels ignored on every side"},
      {"eval.max_val", "PSNR peak value"},
      {"eval.seed_offset", "eval noise seeds = seed + offset + index"},
      {"io.manifest", "RGB image list; empty uses procedural images"},
      {"io.out_dir", "outputs (logs, reports)"},
      {"io.checkpoint_dir", "phase checkpoints <phase>.ckpt"},
      {"io.bit_depth", "PPM/PGM output depth: 8 | 16"},
      {"io.procedural_images", "procedural pool size without a manifest"},
      {"io.procedural_size", "procedural image extent"},
  };
  const json d = RunConfig::defaults().to_json();
  std::ostringstream out;
  for (const auto& [key, doc] : docs) {
    const json::json_pointer ptr("/" + [&] {
      std::string p = key;
      for (auto& ch : p)
        if (ch == '.') ch = '/';
      return p;
    }());
    const std::string value = key == "model.variant" || !key.starts_with("model.")
                                  ? d.at(ptr).dump()
                                  : d.at(ptr).dump() + " (toy)";
    out << "  " << key << " = " << value << "  " << doc << "\n";
  }
  return out.str();
}

std::vector<std::filesystem::path> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open manifest " + path.string());
  std::vector<std::filesystem::path> out;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    // Simulation manifests carry extra tab-separated columns; the RGB path is first.
    std::filesystem::path p = line.substr(first, line.find('\t', first) - first);
    out.push_back(p.is_absolute() ? p : path.parent_path() / p);
  }
  return out;
}

}  // namespace tsanet
