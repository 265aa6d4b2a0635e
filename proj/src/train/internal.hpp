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

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "densecap/errors.hpp"
#include "densecap/train/trainer.hpp"

namespace densecap::train::detail {

static_assert(std::endian::native == std::endian::little, "binary formats assume little-endian");

enum : std::uint32_t { kShuffle = 1, kSample = 2 };

// Deterministic generator for (seed, stage, counter, purpose).
inline std::mt19937_64 rng_for(std::uint64_t seed, Stage stage, std::uint64_t counter,
                               std::uint32_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stage), static_cast<std::uint32_t>(counter),
                    static_cast<std::uint32_t>(counter >> 32), purpose};
  return std::mt19937_64(seq);
}

inline std::vector<std::size_t> permutation(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  // Fisher-Yates with an explicit draw so the order does not depend on the
  // standard library's shuffle.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(p[i - 1], p[j]);
  }
  return p;
}

class Writer {
 public:
  template <typename T>
  void put(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void bytes(const std::string& s) { out_ += s; }
  void doubles(std::span<const double> v) {
    out_.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  Reader(const std::string& in, std::string source) : in_(in), source_(std::move(source)) {}
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::vector<double> doubles(std::size_t n) {
    if (n > (in_.size() - pos_) / sizeof(double)) fail("truncated payload");
    std::vector<double> v(n);
    std::memcpy(v.data(), in_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
    return v;
  }
  bool done() const { return pos_ == in_.size(); }
  [[noreturn]] void fail(const std::string& msg) const {
    throw DataError(source_ + ": " + msg + " at byte " + std::to_string(pos_));
  }

 private:
  void need(std::size_t n) const {
    if (n > in_.size() - pos_) fail("truncated file");
  }
  const std::string& in_;
  std::string source_;
  std::size_t pos_ = 0;
};

// Per-parameter velocity buffers, created as zeros on first use.
ad::Tensor& velocity(std::map<std::string, ad::Tensor>& momentum, const ad::ParamStore& params,
                     const std::string& name);

// Clips the named gradients and applies one momentum step with the rate
// returned by lr(name).
template <typename Lr>
void update(ad::ParamStore& params, std::map<std::string, ad::Tensor>& momentum,
            const std::vector<std::string>& names, const TrainConfig& config, Lr&& lr) {
  clip_grad_norm(params, names, config.clip_norm);
  for (const auto& name : names) {
    ad::Tensor& p = params.get(name);
    ad::Tensor& v = velocity(momentum, params, name);
    std::vector<double> zeros;
    std::span<const double> g = p.grad();
    if (g.size() != p.numel()) {
      zeros.assign(p.numel(), 0.0);
      g = zeros;
    }
    sgd_step(p.values_mut(), g, v.values_mut(), lr(name), config.momentum);
  }
}

inline void check_finite(double loss, Stage stage, std::size_t step) {
  if (!std::isfinite(loss)) {
    throw DivergenceError(to_string(stage) + " stage: non-finite loss at step " + std::to_string(step));
  }
}

}  // namespace densecap::train::detail
