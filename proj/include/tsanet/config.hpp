// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

// The run configuration file: one JSON document with sections cfa, model,
// train, eval and io plus top-level version and seed. Missing keys take
// their defaults; unknown keys are an error. Model keys default from the
// chosen variant's preset.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"
#include "tsanet/model.hpp"
#include "tsanet/train.hpp"

namespace tsanet {

inline constexpr int kConfigVersion = 1;

struct EvalConfig {
  std::string psnr_protocol = "rgb";  // rgb | luma
  std::int64_t border_crop = 0;       // pixels dropped on every side
  double max_val = 1.0;
  std::uint64_t seed_offset = 1000;   // eval synthesis noise seeds = seed + offset + index
};

struct IoConfig {
  std::string manifest;  // RGB image paths, one per line
  std::string out_dir = "out";
  std::string checkpoint_dir = "checkpoints";
  int bit_depth = 16;
  // Training pool when no manifest is given.
  std::int64_t procedural_images = 4;
  std::int64_t procedural_size = 128;
};

struct RunConfig {
  int version = kConfigVersion;
  std::uint64_t seed = 0;
  double noise_sigma = 0.0;  // cfa.noise_sigma
  ModelConfig model = ModelConfig::preset("toy");
  TrainConfig train;
  bool train_from_scratch = false;  // joint phase without pretrained stages
  EvalConfig eval;
  IoConfig io;

  // Toy model, toy-scale training defaults.
  static RunConfig defaults();
  nlohmann::json to_json() const;
  // Throws ConfigError naming the offending key.
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);
  void validate() const;
};

// One line per key: dotted path, default value and a short description.
std::string config_reference();

// Reads a manifest: one RGB path per line, blank lines and '#' comments
// skipped; relative paths resolve against the manifest's directory. Extra
// tab-separated columns (simulation manifests) are ignored.
std::vector<std::filesystem::path> read_manifest(const std::filesystem::path& path);

}  // namespace tsanet
