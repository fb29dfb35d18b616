// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

// Binary netpbm I/O: P6 (RGB) and P5 (gray), 8- or 16-bit (big-endian
// samples when maxval > 255). Samples are scaled to [0, 1] on load.

#pragma once

#include <filesystem>
#include <string>
#include <variant>

#include "tsanet/cfa.hpp"

namespace tsanet {

enum class BitDepth { k8 = 8, k16 = 16 };

RgbImage decode_ppm(const std::string& bytes);
RawImage decode_pgm(const std::string& bytes);
std::string encode_ppm(const RgbImage& img, BitDepth depth);
std::string encode_pgm(const RawImage& img, BitDepth depth);

RgbImage load_rgb(const std::filesystem::path& path);
RawImage load_gray(const std::filesystem::path& path);
// Dispatches on the magic number.
std::variant<RgbImage, RawImage> load_image(const std::filesystem::path& path);
void save_image(const RgbImage& img, const std::filesystem::path& path,
                BitDepth depth = BitDepth::k16);
void save_image(const RawImage& img, const std::filesystem::path& path,
                BitDepth depth = BitDepth::k16);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace tsanet
