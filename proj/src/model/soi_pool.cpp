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

#include "densecap/model/soi_pool.hpp"

#include <algorithm>
#include <cmath>

#include "densecap/errors.hpp"
#include "densecap/tensor/ops.hpp"

namespace densecap {

std::vector<std::pair<std::size_t, std::size_t>> soi_bins(double start, double end,
                                                          std::size_t bins,
                                                          std::size_t timesteps) {
  if (bins == 0) throw ContractError("soi_pool: bin count must be positive");
  const double len = end - start;
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(bins);
  const double last = static_cast<double>(timesteps - 1);
  for (std::size_t b = 0; b < bins; ++b) {
    const double lo = std::floor(start + static_cast<double>(b) * len / static_cast<double>(bins));
    const double hi =
        std::floor(start + static_cast<double>(b + 1) * len / static_cast<double>(bins));
    const auto s = static_cast<std::size_t>(std::clamp(lo, 0.0, last));
    const auto e = std::min(timesteps, std::max(s + 1, static_cast<std::size_t>(std::max(hi, 0.0))));
    out.emplace_back(s, e);
  }
  return out;
}

ad::Tensor soi_pool(ad::Tape& tape, const FeatureMap& features, const Segment& proposal,
                    std::size_t bins) {
  const auto& x = features.data;
  if (x.rank() != 4) throw ShapeError("soi_pool: feature map must be C x T x H x W");
  const std::size_t c = x.dim(0), t = x.dim(1), hw = x.dim(2) * x.dim(3);
  const double start = std::max(0.0, proposal.start());
  const double end = std::min(static_cast<double>(t), proposal.end());
  if (!(end > start)) {
    throw ContractError("soi_pool: proposal [" + std::to_string(proposal.start()) + ", " +
                        std::to_string(proposal.end()) + ") lies outside the feature extent [0, " +
                        std::to_string(t) + ")");
  }
  const auto ranges = soi_bins(start, end, bins, t);
  ad::Tensor out({c, bins, 1, 1});
  std::vector<std::size_t> argmax(c * bins);
  auto xv = x.values();
  auto ov = out.values_mut();
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t b = 0; b < bins; ++b) {
      const auto [s, e] = ranges[b];
      std::size_t best = (ch * t + s) * hw;
      for (std::size_t i = (ch * t + s) * hw; i < (ch * t + e) * hw; ++i) {
        if (xv[i] > xv[best]) best = i;
      }
      ov[ch * bins + b] = xv[best];
      argmax[ch * bins + b] = best;
    }
  }
  if (tape.wants({&x})) {
    tape.record("soi_pool", {x}, out, [x, out, argmax = std::move(argmax)]() {
      auto& g = x.ensure_grad();
      const auto& go = out.node().grad;
      for (std::size_t i = 0; i < argmax.size(); ++i) g[argmax[i]] += go[i];
    });
  }
  return out;
}

SoiFeatureHead::SoiFeatureHead(ad::ParamStore& params, std::size_t feature_channels,
                               const SoiConfig& config, const std::string& prefix)
    : config_(config), channels_(feature_channels) {
  weight_ = params.add(prefix + ".w", {feature_channels * config.bins, config.fc_dim},
                       ad::Init::he_uniform);
  bias_ = params.add(prefix + ".b", {config.fc_dim}, ad::Init::zeros);
  names_ = {prefix + ".w", prefix + ".b"};
}

ProposalFeature SoiFeatureHead::proposal_feature(ad::Tape& tape, const FeatureMap& features,
                                                 const Segment& proposal) const {
  ad::Tensor pooled = soi_pool(tape, features, proposal, config_.bins);
  ad::Tensor flat = ad::reshape(tape, pooled, {1, channels_ * config_.bins});
  return {ad::relu(tape, ad::linear(tape, flat, weight_, bias_)), proposal};
}

ContextVector SoiFeatureHead::context_vector(ad::Tape& tape, const FeatureMap& features) const {
  const auto t = static_cast<double>(features.timesteps());
  return {proposal_feature(tape, features, Segment::from_bounds(0.0, t)).vector};
}

}  // namespace densecap
