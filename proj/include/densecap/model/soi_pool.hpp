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

#include <utility>
#include <vector>

#include "densecap/model/config.hpp"
#include "densecap/model/encoder.hpp"
#include "densecap/model/segment.hpp"
#include "densecap/tensor/params.hpp"

namespace densecap {

// Half-open timestep ranges [first, second) of the SoI bins for a proposal
// already clipped to [0, timesteps].
std::vector<std::pair<std::size_t, std::size_t>> soi_bins(double start, double end,
                                                          std::size_t bins,
                                                          std::size_t timesteps);

// Segment-of-interest max pooling: C x T x H x W -> C x B x 1 x 1. The
// proposal is clipped to the feature extent; each bin takes the max over its
// timesteps and all spatial positions. Gradients follow the per-bin argmax.
ad::Tensor soi_pool(ad::Tape& tape, const FeatureMap& features, const Segment& proposal,
                    std::size_t bins);

// Fixed-width proposal descriptor I_p (1 x D_fc).
struct ProposalFeature {
  ad::Tensor vector;
  Segment proposal;
};

// Video-level context I_c (1 x D_fc).
struct ContextVector {
  ad::Tensor vector;
};

/// Shared fully connected layer applied to SoI-pooled features, for both
/// proposals and the whole-video context.
class SoiFeatureHead {
 public:
  SoiFeatureHead(ad::ParamStore& params, std::size_t feature_channels, const SoiConfig& config,
                 const std::string& prefix = "fc6");

  ProposalFeature proposal_feature(ad::Tape& tape, const FeatureMap& features,
                                   const Segment& proposal) const;
  // The same pipeline over the full temporal extent.
  ContextVector context_vector(ad::Tape& tape, const FeatureMap& features) const;

  std::size_t bins() const { return config_.bins; }
  std::size_t dim() const { return config_.fc_dim; }
  const std::vector<std::string>& param_names() const { return names_; }

 private:
  SoiConfig config_;
  std::size_t channels_;
  ad::Tensor weight_, bias_;
  std::vector<std::string> names_;
};

}  // namespace densecap
