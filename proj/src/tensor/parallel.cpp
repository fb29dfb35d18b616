// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include "tsanet/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace tsanet {

int worker_count() {
  static const int count = [] {
    const char* env = std::getenv("HYBRIDEVS_THREADS");
    if (!env) return 1;
    try {
      return std::max(1, std::stoi(env));
    } catch (...) {
      return 1;
    }
  }();
  return count;
}

void parallel_for(std::int64_t n, std::int64_t min_chunk,
                  const std::function<void(std::int64_t, std::int64_t)>& body) {
  if (n <= 0) return;
  const std::int64_t workers =
      std::min<std::int64_t>(worker_count(), std::max<std::int64_t>(1, n / std::max<std::int64_t>(1, min_chunk)));
  if (workers <= 1) {
    body(0, n);
    return;
  }
  const std::int64_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(workers - 1));
  for (std::int64_t w = 1; w < workers; ++w) {
    const std::int64_t b = w * chunk, e = std::min(n, b + chunk);
    if (b < e) threads.emplace_back([&body, b, e] { body(b, e); });
  }
  body(0, std::min(n, chunk));
  for (auto& t : threads) t.join();
}

}  // namespace tsanet
