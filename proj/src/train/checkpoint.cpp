// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include "tsanet/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "tsanet/pnm.hpp"

namespace tsanet {

namespace {

constexpr char kMagic[] = "TSACKPT1\n";
constexpr std::size_t kMagicLen = sizeof(kMagic) - 1;

void put_floats(std::string& out, const std::vector<float>& v) {
  const auto at = out.size();
  out.resize(at + v.size() * 4);
  char* p = out.data() + at;
  for (float f : v) {
    auto u = std::bit_cast<std::uint32_t>(f);
    for (int b = 0; b < 4; ++b) *p++ = static_cast<char>((u >> (8 * b)) & 0xff);
  }
}

std::vector<float> get_floats(const char* p, std::size_t count) {
  std::vector<float> out(count);
  const auto* q = reinterpret_cast<const unsigned char*>(p);
  for (std::size_t i = 0; i < count; ++i, q += 4) {
    const std::uint32_t u = q[0] | (q[1] << 8) | (q[2] << 16) | (static_cast<std::uint32_t>(q[3]) << 24);
    out[i] = std::bit_cast<float>(u);
  }
  return out;
}

}  // namespace

const CheckpointArray* Checkpoint::find(const std::string& name) const {
  for (const auto& a : arrays)
    if (a.name == name) return &a;
  return nullptr;
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
  nlohmann::json dir = nlohmann::json::array();
  std::int64_t offset = 0;
  for (const auto& a : ckpt.arrays) {
    if (numel_of(a.shape) != static_cast<std::int64_t>(a.data.size())) {
      throw ShapeError("encode_checkpoint", a.shape, Shape{static_cast<std::int64_t>(a.data.size())}, a.name);
    }
    dir.push_back({{"name", a.name}, {"shape", a.shape}, {"offset", offset}});
    offset += static_cast<std::int64_t>(a.data.size()) * 4;
  }
  const nlohmann::json header = {{"format", "tsanet-checkpoint"},
                                 {"version", kCheckpointVersion},
                                 {"config", ckpt.config},
                                 {"phase", ckpt.phase},
                                 {"iteration", ckpt.iteration},
                                 {"adam_step", ckpt.adam_step},
                                 {"arrays", dir}};
  const std::string text = header.dump();
  std::string out = kMagic + std::to_string(text.size()) + "\n" + text;
  out.reserve(out.size() + static_cast<std::size_t>(offset));
  for (const auto& a : ckpt.arrays) put_floats(out, a.data);
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  if (bytes.compare(0, kMagicLen, kMagic) != 0) throw FormatError("checkpoint: bad magic");
  const auto nl = bytes.find('\n', kMagicLen);
  if (nl == std::string::npos || nl == kMagicLen || nl - kMagicLen > 12) throw FormatError("checkpoint: bad header length line");
  std::size_t header_len = 0;
  for (std::size_t i = kMagicLen; i < nl; ++i) {
    if (bytes[i] < '0' || bytes[i] > '9') throw FormatError("checkpoint: bad header length line");
    header_len = header_len * 10 + static_cast<std::size_t>(bytes[i] - '0');
  }
  const auto header_at = nl + 1;
  if (bytes.size() < header_at + header_len) throw FormatError("checkpoint: truncated header");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(bytes.substr(header_at, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: header is not valid JSON: ") + e.what());
  }
  Checkpoint c;
  const auto payload_at = header_at + header_len;
  const auto payload = bytes.size() - payload_at;
  try {
    if (h.at("format") != "tsanet-checkpoint") throw FormatError("checkpoint: unknown format tag");
    if (h.at("version").get<int>() != kCheckpointVersion) {
      throw FormatError("checkpoint: unsupported version " + h.at("version").dump());
    }
    c.config = h.at("config");
    c.phase = h.at("phase").get<std::string>();
    c.iteration = h.at("iteration").get<std::int64_t>();
    c.adam_step = h.at("adam_step").get<std::int64_t>();
    std::size_t expect = 0;
    for (const auto& d : h.at("arrays")) {
      CheckpointArray a;
      a.name = d.at("name").get<std::string>();
      a.shape = d.at("shape").get<Shape>();
      for (auto s : a.shape)
        if (s < 0) throw FormatError("checkpoint: negative extent in " + a.name);
      const auto offset = d.at("offset").get<std::size_t>();
      const auto count = static_cast<std::size_t>(numel_of(a.shape));
      if (offset != expect) throw FormatError("checkpoint: array " + a.name + " is not contiguous");
      if (offset + count * 4 > payload) throw FormatError("checkpoint: truncated payload at " + a.name);
      a.data = get_floats(bytes.data() + payload_at + offset, count);
      expect = offset + count * 4;
      c.arrays.push_back(std::move(a));
    }
    if (expect != payload) throw FormatError("checkpoint: trailing bytes after the last array");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: malformed header: ") + e.what());
  }
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

Checkpoint make_checkpoint(const TsaNet<float>& net, const nlohmann::json& config,
                           const std::string& phase, std::int64_t iteration, const AdamState* adam) {
  Checkpoint c;
  c.config = config;
  c.phase = phase;
  c.iteration = iteration;
  const auto& entries = net.params().entries();
  for (const auto& e : entries) {
    const auto d = e.value.data();
    c.arrays.push_back({e.name, e.value.shape(), {d.begin(), d.end()}});
  }
  if (adam) {
    c.adam_step = adam->step;
    for (const char* kind : {"m", "v"}) {
      const auto& moments = kind[0] == 'm' ? adam->m : adam->v;
      for (const auto& e : entries) {
        const auto it = moments.find(e.name);
        std::vector<float> data = it != moments.end() ? it->second : std::vector<float>(static_cast<std::size_t>(e.value.numel()), 0.0f);
        c.arrays.push_back({std::string("adam.") + kind + "." + e.name, e.value.shape(), std::move(data)});
      }
    }
  }
  return c;
}

void load_params(TsaNet<float>& net, const Checkpoint& ckpt, const std::string& prefix) {
  std::vector<std::pair<Tensor<float>, const CheckpointArray*>> plan;
  for (const auto& e : net.params().entries()) {
    if (!prefix.empty() && !e.name.starts_with(prefix)) continue;
    const auto* a = ckpt.find(e.name);
    if (!a) throw FormatError("checkpoint is missing array " + e.name);
    if (a->shape != e.value.shape()) throw ShapeError("load_params", a->shape, e.value.shape(), e.name);
    plan.emplace_back(e.value, a);
  }
  for (auto& [t, a] : plan) std::copy(a->data.begin(), a->data.end(), t.data().begin());
}

AdamState load_adam(const TsaNet<float>& net, const Checkpoint& ckpt) {
  AdamState s;
  s.step = ckpt.adam_step;
  for (const auto& e : net.params().entries()) {
    for (const char* kind : {"m", "v"}) {
      const auto name = std::string("adam.") + kind + "." + e.name;
      const auto* a = ckpt.find(name);
      if (!a) throw FormatError("checkpoint is missing array " + name);
      if (a->shape != e.value.shape()) throw ShapeError("load_adam", a->shape, e.value.shape(), name);
      (kind[0] == 'm' ? s.m : s.v)[e.name] = a->data;
    }
  }
  return s;
}

}  // namespace tsanet
