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

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "densecap/tensor/tensor.hpp"

namespace densecap::ad {

enum class Init {
  zeros,
  ones,
  // U(-sqrt(6 / fan_in), sqrt(6 / fan_in)); fan_in = numel / dim(0) for conv
  // weights (Cout first) and dim(0) for D x E linear weights.
  he_uniform,
  // U(-1 / sqrt(fan_in), 1 / sqrt(fan_in)).
  fan_in_uniform,
  // U(-0.1, 0.1).
  small_uniform,
};

/// Named, insertion-ordered collection of learnable tensors.
///
/// Initialization of each tensor draws from an RNG seeded by (seed, name), so
/// values do not depend on registration order.
class ParamStore {
 public:
  explicit ParamStore(std::uint64_t seed = 0) : seed_(seed) {}

  Tensor& add(const std::string& name, Shape shape, Init init, bool conv_layout = false);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  const Tensor& get(const std::string& name) const;
  Tensor& get(const std::string& name);

  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }
  std::size_t total_numel() const;

  void zero_grad();
  // Overwrites values of every shared name; shapes must agree.
  void copy_values_from(const ParamStore& other);
  void fill_zero();

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
  std::map<std::string, std::size_t> index_;
};

// FNV-1a 64-bit; stable across platforms.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 1469598103934665603ULL);

}  // namespace densecap::ad
