// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include "tsanet/verify.hpp"

#include <functional>

#include "tsanet/blocks.hpp"
#include "tsanet/model.hpp"
#include "tsanet/rng.hpp"

namespace tsanet {

namespace {

using D = double;
using TD = Tensor<D>;

TD noise(const Shape& shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  std::vector<D> data(static_cast<std::size_t>(numel_of(shape)));
  for (auto& v : data) v = lo + (hi - lo) * uniform01(rng);
  return TD::from_data(shape, std::move(data));
}

// Random linear functional, so every output element gets its own upstream
// gradient.
TD scalarize(const TD& y, std::uint64_t seed) {
  return ops::sum(ops::mul(y, noise(y.shape(), seed ^ 0x5eed)));
}

// Zero-initialized outputs would hide whole paths from the check.
void randomize(ParamStore<D>& store, std::uint64_t seed, double amp) {
  Rng rng(seed);
  for (const auto& e : store.entries()) {
    TD t = e.value;
    const bool around_one = e.name.ends_with(".gain") || e.name.ends_with(".skip");
    for (auto& v : t.data()) {
      const double u = amp * (2.0 * uniform01(rng) - 1.0);
      v = around_one ? 1.0 + u : u;
    }
  }
}

std::vector<TD> leaves_of(const ParamStore<D>& store, std::vector<TD> extra) {
  std::vector<TD> out;
  for (const auto& e : store.entries()) out.push_back(e.value);
  out.insert(out.end(), extra.begin(), extra.end());
  return out;
}

GradCheckReport check(const std::function<TD()>& fwd, std::vector<TD> leaves, std::uint64_t seed,
                      std::int64_t coords) {
  return finite_diff_check<D>([&] { return scalarize(fwd(), seed); }, std::move(leaves),
                              kSuiteStep, kSuiteTol, coords, seed);
}

const BlockDims kDims{.heads = 2, .window = 2, .mlp_ratio = 2, .expand = 2, .state = 3};

template <typename Block, typename Build, typename Fwd>
GradCheckReport block_case(std::uint64_t seed, Build build, std::vector<TD> inputs, Fwd fwd) {
  ParamStore<D> store(seed);
  const Block block = build(store);
  randomize(store, seed, 0.3);
  return check([&] { return fwd(block); }, leaves_of(store, inputs), seed, 40);
}

// The full network holds many ReLU kinks; a step of 1e-4 straddles one often
// enough to break the check, so the whole-model case uses a finer step.
constexpr double kNetStep = 1e-6;

GradCheckReport tsanet_case(std::uint64_t seed) {
  ModelConfig cfg = ModelConfig::preset("toy");
  cfg.seed = seed;
  TsaNet<D> net(cfg);
  randomize(net.params(), seed, 0.2);
  const Sample s = synthesize_sample(procedural_image(16, 16, seed), cfg.cfa, 0.0, seed);
  const auto in = make_inputs<D>({s});
  const auto target = make_targets<D>({s});
  return finite_diff_check<D>(
      [&] { return ops::charbonnier(net.forward(in), target.rgb, 1e-3); },
      leaves_of(net.params(), {}), kNetStep, kSuiteTol, 3, seed);
}

}  // namespace

const std::vector<std::string>& gradcheck_case_names() {
  static const std::vector<std::string> names = {"ffm",  "spa",  "wmca", "qcsa", "sel_scan_1d",
                                                 "ss2d", "rvss", "cssb", "csb",  "tsanet"};
  return names;
}

GradCheckReport run_gradcheck_case(const std::string& name, std::uint64_t seed) {
  const auto x = noise({1, 4, 4, 4}, seed + 10);
  const auto p = noise({1, 4, 4, 4}, seed + 20);
  if (name == "ffm") {
    const auto m = noise({1, 4, 4, 2}, seed + 30, 0.0, 1.0);
    return check([&] { return ops::fourier_features(m, 4); }, {m}, seed, 0);
  }
  if (name == "spa") {
    return block_case<Spa<D>>(seed, [](auto& s) { return Spa<D>(s, "spa", 4, 4); }, {x, p},
                              [&](const auto& b) { return b(x, p); });
  }
  if (name == "wmca") {
    return block_case<WindowAttention<D>>(
        seed, [](auto& s) { return WindowAttention<D>(s, "wmca", 4, 2, 2); }, {x, p},
        [&](const auto& b) { return b(x, p, 1); });
  }
  if (name == "qcsa") {
    return block_case<Qcsa<D>>(seed, [](auto& s) { return Qcsa<D>(s, "qcsa", 4, 2, 2, 2, 1); },
                               {x, p}, [&](const auto& b) { return b(x, p); });
  }
  if (name == "sel_scan_1d") {
    const std::int64_t len = 12, ch = 3, n = 4;
    const auto sx = noise({1, 1, len, ch}, seed + 1);
    const auto delta = noise({1, 1, len, ch}, seed + 2, 0.05, 1.0);
    const auto a = noise({ch, n}, seed + 3, -2.0, -0.1);
    const auto b = noise({1, 1, len, n}, seed + 4);
    const auto c = noise({1, 1, len, n}, seed + 5);
    const auto d = noise({ch}, seed + 6);
    return check([&] { return ops::selective_scan(sx, delta, a, b, c, d, ops::ScanOrder::kRowForward); },
                 {sx, delta, a, b, c, d}, seed, 0);
  }
  if (name == "ss2d") {
    return block_case<Ss2d<D>>(seed, [](auto& s) { return Ss2d<D>(s, "ss2d", 4, 3); }, {x},
                               [&](const auto& b) { return b(x); });
  }
  if (name == "rvss") {
    return block_case<Rvss<D>>(seed, [](auto& s) { return Rvss<D>(s, "rvss", 4, 2, 3); }, {x},
                               [&](const auto& b) { return b(x); });
  }
  if (name == "cssb") {
    return block_case<DualBlock<D>>(
        seed,
        [](auto& s) {
          return DualBlock<D>(s, "cssb", 4, 4, kDims, AttnBranch::kCross, ScanBranch::kRvss, 1);
        },
        {x, p}, [&](const auto& b) { return b(x, p); });
  }
  if (name == "csb") {
    return block_case<DualBlock<D>>(
        seed,
        [](auto& s) {
          return DualBlock<D>(s, "csb", 4, 4, kDims, AttnBranch::kConv, ScanBranch::kRvss, 0);
        },
        {x}, [&](const auto& b) { return b(x); });
  }
  if (name == "tsanet") return tsanet_case(seed);
  throw ValueError("unknown gradcheck case '" + name + "'");
}

}  // namespace tsanet
