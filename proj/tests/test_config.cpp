// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <functional>

#include "doctest.h"
#include "tsanet/config.hpp"
#include "tsanet/error.hpp"
#include "tsanet/pnm.hpp"

using namespace tsanet;
using nlohmann::json;

namespace {

void leaf_keys(const json& j, const std::string& prefix, std::vector<std::string>& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object()) leaf_keys(*it, key, out);
    else out.push_back(key);
  }
}

}  // namespace

TEST_CASE("config round-trips through JSON") {
  auto c = RunConfig::defaults();
  c.seed = 42;
  c.noise_sigma = 0.02;
  c.train.loss_mode = LossMode::kDual;
  c.train.freeze = {"q2q."};
  c.eval.psnr_protocol = "luma";
  c.model.toggles.spa = false;
  const auto j = c.to_json();
  const auto back = RunConfig::from_json(j);
  CHECK(back.to_json() == j);
  CHECK(back.seed == 42);
  CHECK(back.model.seed == 42);
  CHECK_FALSE(back.model.toggles.spa);
}

TEST_CASE("missing keys default, variant presets apply first") {
  const auto c = RunConfig::from_json(json{{"version", 1}, {"model", {{"variant", "s"}}}});
  CHECK(c.model.q2r.widths == ModelConfig::preset("s").q2r.widths);
  const auto d = RunConfig::from_json(json{{"version", 1}, {"model", {{"variant", "s"}, {"heads", 1}}}});
  CHECK(d.model.dims.heads == 1);
  CHECK(d.model.q2r.widths == ModelConfig::preset("s").q2r.widths);
}

TEST_CASE("config errors name the key") {
  auto expect_key = [](const json& j, const std::string& key) {
    try {
      RunConfig::from_json(j);
      FAIL("expected ConfigError for " << key);
    } catch (const ConfigError& e) {
      CHECK_MESSAGE(std::string(e.what()).find(key) != std::string::npos, e.what());
    }
  };
  expect_key(json{{"seed", 1}}, "version");
  expect_key(json{{"version", 1}, {"train", {{"lr", 1e-3}}}}, "train.lr");
  expect_key(json{{"version", 1}, {"colour", 1}}, "colour");
  expect_key(json{{"version", 1}, {"train", {{"batch_size", "four"}}}}, "train.batch_size");
  expect_key(json{{"version", 1}, {"model", {{"variant", "xl"}}}}, "xl");
  expect_key(json{{"version", 2}}, "version");
  CHECK_THROWS_AS(RunConfig::from_json(json{{"version", 1}, {"eval", {{"psnr_protocol", "y"}}}}), ConfigError);
}

TEST_CASE("the reference lists every key") {
  std::vector<std::string> keys;
  leaf_keys(RunConfig::defaults().to_json(), "", keys);
  const auto ref = config_reference();
  REQUIRE(keys.size() > 30);
  for (const auto& k : keys) CHECK_MESSAGE(ref.find(k + " ") != std::string::npos, k);
}

TEST_CASE("manifests") {
  const auto dir = std::filesystem::temp_directory_path() / "tsanet_test_manifest";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  write_file(dir / "m.txt", "# images\na.ppm\n\n/abs/b.ppm\tx.pgm\n");
  const auto paths = read_manifest(dir / "m.txt");
  REQUIRE(paths.size() == 2);
  CHECK(paths[0] == dir / "a.ppm");
  CHECK(paths[1] == "/abs/b.ppm");
  CHECK_THROWS(read_manifest(dir / "none.txt"));
  std::filesystem::remove_all(dir);
}
