// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

// The finite-difference suite shared by the CLI and the test binaries. Each
// case builds one unit at a small 64-bit shape, randomizes its parameters
// and inputs from the seed, and checks every leaf.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tsanet/gradcheck.hpp"

namespace tsanet {

inline constexpr double kSuiteStep = 1e-4;
inline constexpr double kSuiteTol = 1e-3;

// ffm, spa, wmca, qcsa, sel_scan_1d, ss2d, rvss, cssb, csb, tsanet.
const std::vector<std::string>& gradcheck_case_names();

// Throws ValueError for an unknown name.
GradCheckReport run_gradcheck_case(const std::string& name, std::uint64_t seed);

}  // namespace tsanet
