// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

// Multiply-add accounting. Primitives report their MACs to the active
// CostCounter (if any), attributed to the innermost CostScope path.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace tsanet {

class CostCounter {
 public:
  CostCounter();
  ~CostCounter();
  CostCounter(const CostCounter&) = delete;
  CostCounter& operator=(const CostCounter&) = delete;

  std::int64_t total_macs() const { return total_; }
  // MACs for every path equal to `prefix` or nested below it.
  std::int64_t macs_under(const std::string& prefix) const;
  const std::map<std::string, std::int64_t>& by_path() const { return by_path_; }

  void add(std::int64_t macs);

  static CostCounter* active();

 private:
  friend class CostScope;
  std::int64_t total_ = 0;
  std::map<std::string, std::int64_t> by_path_;
  std::vector<std::string> scopes_;
  CostCounter* previous_ = nullptr;
};

// Pushes a path segment; nested scopes join with '.'.
class CostScope {
 public:
  explicit CostScope(const std::string& segment);
  ~CostScope();
  CostScope(const CostScope&) = delete;
  CostScope& operator=(const CostScope&) = delete;

 private:
  CostCounter* counter_;
};

inline void count_macs(std::int64_t macs) {
  if (auto* c = CostCounter::active()) c->add(macs);
}

}  // namespace tsanet
