// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>

namespace tsanet {

// Worker cap from HYBRIDEVS_THREADS (default 1). Read once per process.
int worker_count();

// Runs body(begin, end) over disjoint chunks of [0, n). Each index is
// handled by exactly one call, so outputs written per index are identical
// for any worker count.
void parallel_for(std::int64_t n, std::int64_t min_chunk,
                  const std::function<void(std::int64_t, std::int64_t)>& body);

}  // namespace tsanet
