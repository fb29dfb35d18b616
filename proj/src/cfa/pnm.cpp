// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include "tsanet/pnm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tsanet/error.hpp"

namespace tsanet {

namespace {

struct Header {
  char kind = 0;  // '5' or '6'
  std::int64_t width = 0;
  std::int64_t height = 0;
  int maxval = 0;
  std::size_t payload_offset = 0;
};

class HeaderReader {
 public:
  explicit HeaderReader(const std::string& bytes) : bytes_(bytes) {}

  std::int64_t next_int(const char* what) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      throw FormatError(std::string("pnm: expected ") + what + " in header");
    }
    std::int64_t v = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      v = v * 10 + (bytes_[pos_++] - '0');
      if (v > (1LL << 31)) throw FormatError(std::string("pnm: ") + what + " too large");
    }
    return v;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& bytes_;
  std::size_t pos_ = 2;
};

Header parse_header(const std::string& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw FormatError("pnm: missing P5/P6 magic");
  }
  Header h;
  h.kind = bytes[1];
  HeaderReader reader(bytes);
  h.width = reader.next_int("width");
  h.height = reader.next_int("height");
  const auto maxval = reader.next_int("maxval");
  if (h.width <= 0 || h.height <= 0) throw FormatError("pnm: zero extent");
  if (maxval <= 0 || maxval > 65535) throw FormatError("pnm: maxval out of range");
  h.maxval = static_cast<int>(maxval);
  if (reader.pos() >= bytes.size() ||
      !std::isspace(static_cast<unsigned char>(bytes[reader.pos()]))) {
    throw FormatError("pnm: header must end with one whitespace byte");
  }
  h.payload_offset = reader.pos() + 1;
  return h;
}

std::vector<float> read_samples(const std::string& bytes, const Header& h, std::int64_t count) {
  const int width = h.maxval > 255 ? 2 : 1;
  const auto needed = static_cast<std::size_t>(count * width);
  if (bytes.size() < h.payload_offset + needed) {
    throw FormatError("pnm: truncated payload (" + std::to_string(bytes.size() - h.payload_offset) +
                      " of " + std::to_string(needed) + " bytes)");
  }
  std::vector<float> out(static_cast<std::size_t>(count));
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + h.payload_offset);
  const float inv = 1.0f / static_cast<float>(h.maxval);
  for (std::int64_t i = 0; i < count; ++i) {
    const int v = width == 2 ? (p[2 * i] << 8) | p[2 * i + 1] : p[i];
    if (v > h.maxval) throw FormatError("pnm: sample exceeds maxval");
    out[i] = static_cast<float>(v) * inv;
  }
  return out;
}

std::string encode(char kind, std::int64_t w, std::int64_t h, const std::vector<float>& samples,
                   BitDepth depth) {
  const int maxval = depth == BitDepth::k16 ? 65535 : 255;
  std::string out = "P";
  out += kind;
  out += "\n" + std::to_string(w) + " " + std::to_string(h) + "\n" + std::to_string(maxval) + "\n";
  const std::size_t header = out.size();
  const int width = depth == BitDepth::k16 ? 2 : 1;
  out.resize(header + samples.size() * width);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const float clamped = std::clamp(samples[i], 0.0f, 1.0f);
    const auto v = static_cast<unsigned>(std::lround(static_cast<double>(clamped) * maxval));
    if (width == 2) {
      out[header + 2 * i] = static_cast<char>(v >> 8);
      out[header + 2 * i + 1] = static_cast<char>(v & 0xff);
    } else {
      out[header + i] = static_cast<char>(v);
    }
  }
  return out;
}

}  // namespace

RgbImage decode_ppm(const std::string& bytes) {
  const Header h = parse_header(bytes);
  if (h.kind != '6') throw FormatError("pnm: expected P6 (RGB)");
  RgbImage img;
  img.height = h.height;
  img.width = h.width;
  img.data = read_samples(bytes, h, h.width * h.height * 3);
  return img;
}

RawImage decode_pgm(const std::string& bytes) {
  const Header h = parse_header(bytes);
  if (h.kind != '5') throw FormatError("pnm: expected P5 (gray)");
  RawImage img;
  img.height = h.height;
  img.width = h.width;
  img.data = read_samples(bytes, h, h.width * h.height);
  return img;
}

std::string encode_ppm(const RgbImage& img, BitDepth depth) {
  return encode('6', img.width, img.height, img.data, depth);
}

std::string encode_pgm(const RawImage& img, BitDepth depth) {
  return encode('5', img.width, img.height, img.data, depth);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("short write to " + path.string());
}

RgbImage load_rgb(const std::filesystem::path& path) { return decode_ppm(read_file(path)); }
RawImage load_gray(const std::filesystem::path& path) { return decode_pgm(read_file(path)); }

std::variant<RgbImage, RawImage> load_image(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return decode_ppm(bytes);
  return decode_pgm(bytes);
}

void save_image(const RgbImage& img, const std::filesystem::path& path, BitDepth depth) {
  write_file(path, encode_ppm(img, depth));
}

void save_image(const RawImage& img, const std::filesystem::path& path, BitDepth depth) {
  write_file(path, encode_pgm(img, depth));
}

}  // namespace tsanet
