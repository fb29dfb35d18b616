// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tsanet {

using Shape = std::vector<std::int64_t>;

std::string shape_str(const Shape& shape);

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised by a primitive whose inputs do not conform to its signature.
class ShapeError : public Error {
 public:
  ShapeError(std::string op, Shape lhs, Shape rhs, const std::string& detail = {});

  const std::string& op() const { return op_; }
  const Shape& lhs() const { return lhs_; }
  const Shape& rhs() const { return rhs_; }

 private:
  std::string op_;
  Shape lhs_;
  Shape rhs_;
};

class ValueError : public Error {
 public:
  using Error::Error;
};

// Malformed or truncated files (images, checkpoints, manifests).
class FormatError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace tsanet
