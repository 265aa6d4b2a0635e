// Copyright 2026 The densecap Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "densecap/tensor/params.hpp"

#include <cmath>
#include <random>

#include "densecap/errors.hpp"

namespace densecap::ad {

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

Tensor& ParamStore::add(const std::string& name, Shape shape, Init init, bool conv_layout) {
  if (contains(name)) throw ContractError("parameter '" + name + "' registered twice");
  Tensor t(shape, true);
  auto v = t.values_mut();
  const std::size_t fan_in = conv_layout ? t.numel() / shape.front() : shape.front();
  double bound = 0.0;
  switch (init) {
    case Init::zeros:
      break;
    case Init::ones:
      std::fill(v.begin(), v.end(), 1.0);
      break;
    case Init::he_uniform:
      bound = std::sqrt(6.0 / static_cast<double>(fan_in));
      break;
    case Init::fan_in_uniform:
      bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      break;
    case Init::small_uniform:
      bound = 0.1;
      break;
  }
  if (bound > 0.0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                      static_cast<std::uint32_t>(fnv1a(name)),
                      static_cast<std::uint32_t>(fnv1a(name) >> 32)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& x : v) x = dist(rng);
  }
  index_[name] = tensors_.size();
  names_.push_back(name);
  tensors_.push_back(t);
  return tensors_.back();
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter '" + name + "'");
  return tensors_[it->second];
}

Tensor& ParamStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("unknown parameter '" + name + "'");
  return tensors_[it->second];
}

std::size_t ParamStore::total_numel() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.numel();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& t : tensors_) t.zero_grad();
}

void ParamStore::copy_values_from(const ParamStore& other) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (!other.contains(names_[i])) continue;
    const Tensor& src = other.get(names_[i]);
    if (src.shape() != tensors_[i].shape()) {
      throw ShapeError("parameter '" + names_[i] + "' has shape " +
                       to_string(tensors_[i].shape()) + ", source has " + to_string(src.shape()));
    }
    std::copy(src.values().begin(), src.values().end(), tensors_[i].values_mut().begin());
  }
}

void ParamStore::fill_zero() {
  for (auto& t : tensors_) {
    auto v = t.values_mut();
    std::fill(v.begin(), v.end(), 0.0);
  }
}

}  // namespace densecap::ad
