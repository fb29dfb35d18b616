// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include "tsanet/cost.hpp"

namespace tsanet {

namespace {
thread_local CostCounter* g_active = nullptr;
}  // namespace

CostCounter::CostCounter() : previous_(g_active) { g_active = this; }
CostCounter::~CostCounter() { g_active = previous_; }

CostCounter* CostCounter::active() { return g_active; }

void CostCounter::add(std::int64_t macs) {
  total_ += macs;
  by_path_[scopes_.empty() ? std::string() : scopes_.back()] += macs;
}

std::int64_t CostCounter::macs_under(const std::string& prefix) const {
  std::int64_t sum = 0;
  for (auto it = by_path_.lower_bound(prefix); it != by_path_.end(); ++it) {
    const auto& path = it->first;
    if (path.compare(0, prefix.size(), prefix) != 0) break;
    if (path.size() == prefix.size() || path[prefix.size()] == '.' || prefix.empty()) {
      sum += it->second;
    }
  }
  return sum;
}

CostScope::CostScope(const std::string& segment) : counter_(g_active) {
  if (!counter_) return;
  auto& scopes = counter_->scopes_;
  scopes.push_back(scopes.empty() || scopes.back().empty() ? segment
                                                           : scopes.back() + "." + segment);
}

CostScope::~CostScope() {
  if (counter_) counter_->scopes_.pop_back();
}

}  // namespace tsanet
