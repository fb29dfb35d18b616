// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

// Checkpoint container:
//   "TSACKPT1\n" <decimal header byte length> "\n" <JSON header>
//   <little-endian float32 payloads, back to back>
// The header holds the format version, a config echo, training position
// and an array directory (name, shape, byte offset into the payload).
// Optimizer moments are stored as arrays named adam.m.<param>/adam.v.<param>.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "tsanet/train.hpp"

namespace tsanet {

inline constexpr int kCheckpointVersion = 1;

struct CheckpointArray {
  std::string name;
  Shape shape;
  std::vector<float> data;
};

struct Checkpoint {
  nlohmann::json config = nlohmann::json::object();
  std::string phase;
  std::int64_t iteration = 0;
  std::int64_t adam_step = 0;
  std::vector<CheckpointArray> arrays;

  const CheckpointArray* find(const std::string& name) const;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes);  // FormatError
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Parameters in registration order, then the Adam moments if given.
Checkpoint make_checkpoint(const TsaNet<float>& net, const nlohmann::json& config,
                           const std::string& phase, std::int64_t iteration,
                           const AdamState* adam = nullptr);

// Copies every parameter under `prefix` (all when empty) from the
// checkpoint. Throws FormatError naming the first missing path, or a shape
// mismatch, before modifying anything.
void load_params(TsaNet<float>& net, const Checkpoint& ckpt, const std::string& prefix = "");

// Moments for every parameter in `net`; missing moments are an error.
AdamState load_adam(const TsaNet<float>& net, const Checkpoint& ckpt);

}  // namespace tsanet
