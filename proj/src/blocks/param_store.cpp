// Copyright 2026 The TSANet Toolkit Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "tsanet/blocks.hpp"
#include "tsanet/rng.hpp"

namespace tsanet {

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::string join_path(const std::string& prefix, const std::string& name) {
  return prefix.empty() ? name : prefix + "." + name;
}

template <typename T>
Tensor<T> ParamStore<T>::add(const std::string& name, const Shape& shape, Init init,
                             double stddev) {
  std::vector<double> values(static_cast<std::size_t>(numel_of(shape)), 0.0);
  if (init == Init::kOnes) {
    values.assign(values.size(), 1.0);
  } else if (init == Init::kTruncNormal) {
    Rng rng(derive_seed(seed_, {fnv1a(name)}));
    for (auto& v : values) {
      double z = standard_normal(rng);
      while (std::abs(z) > 2.0) z = standard_normal(rng);
      v = z * stddev;
    }
  }
  return add(name, shape, values);
}

template <typename T>
Tensor<T> ParamStore<T>::add(const std::string& name, const Shape& shape,
                             const std::vector<double>& values) {
  if (contains(name)) throw ValueError("duplicate parameter name: " + name);
  if (static_cast<std::int64_t>(values.size()) != numel_of(shape)) {
    throw ShapeError("ParamStore::add", shape, Shape{static_cast<std::int64_t>(values.size())},
                     name);
  }
  std::vector<T> data(values.begin(), values.end());
  auto t = Tensor<T>::from_data(shape, std::move(data), true);
  entries_.push_back({name, t});
  return t;
}

template <typename T>
bool ParamStore<T>::contains(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return true;
  return false;
}

template <typename T>
Tensor<T> ParamStore<T>::at(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return e.value;
  throw ValueError("no parameter named " + name);
}

template <typename T>
std::int64_t ParamStore<T>::count(const std::string& prefix) const {
  std::int64_t n = 0;
  for (const auto& e : entries_)
    if (prefix.empty() || e.name.rfind(prefix, 0) == 0) n += e.value.numel();
  return n;
}

template <typename T>
void ParamStore<T>::zero_grad() {
  for (auto& e : entries_) e.value.zero_grad();
}

template <typename T>
std::uint64_t ParamStore<T>::seed_for(const std::string& name) const {
  return derive_seed(seed_, {fnv1a(name), 1});
}

template class ParamStore<float>;
template class ParamStore<double>;

}  // namespace tsanet
