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
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "densecap/model/config.hpp"
#include "densecap/model/encoder.hpp"
#include "densecap/model/segment.hpp"
#include "densecap/tensor/params.hpp"

namespace densecap {

// R scales x T positions; anchor (r, p) has flat index r * T + p and is
// centered on feature timestep p, i.e. at p + 0.5.
struct AnchorGrid {
  std::vector<double> scales;
  std::size_t positions = 0;

  std::size_t size() const { return scales.size() * positions; }
  Segment at(std::size_t flat) const;
  Segment at(std::size_t scale, std::size_t position) const;
};

enum class AnchorLabelKind { positive, negative, ignore };

struct RegressionTarget {
  double center = 0.0;  // (c* - c) / l
  double length = 0.0;  // ln(l* / l)
};

struct AnchorLabel {
  AnchorLabelKind kind = AnchorLabelKind::ignore;
  std::optional<std::size_t> matched_gt;
  std::optional<RegressionTarget> target;  // present iff positive
};

// Per-anchor objectness (R x T, after sigmoid) and offsets (2R x T; row 2r is
// the center offset and row 2r + 1 the log-length offset of scale r).
struct SpnOutput {
  ad::Tensor scores;
  ad::Tensor offsets;
};

/// Proposal head on top of the shared feature map: two 3x3x3 conv + ReLU
/// layers, spatial max pooling, then 1x1x1 classification and regression
/// convolutions.
class SegmentProposalNetwork {
 public:
  SegmentProposalNetwork(ad::ParamStore& params, std::size_t feature_channels,
                         const SpnConfig& config, const std::string& prefix = "spn");

  SpnOutput forward(ad::Tape& tape, const FeatureMap& features) const;
  AnchorGrid grid(std::size_t timesteps) const { return {config_.anchor_scales, timesteps}; }
  std::size_t num_scales() const { return config_.anchor_scales.size(); }
  const std::vector<std::string>& param_names() const { return names_; }

 private:
  SpnConfig config_;
  ad::Tensor conv1_w_, conv1_b_, conv2_w_, conv2_b_;
  ad::Tensor cls_w_, cls_b_, reg_w_, reg_b_;
  std::vector<std::string> names_;
};

RegressionTarget transform(const Segment& anchor, const Segment& gt);
Segment inverse_transform(const Segment& anchor, double center_offset, double length_offset);

struct LabelThresholds {
  double positive = 0.7;
  double negative = 0.3;
};

// Positive if tIoU > 0.7 with some ground truth or the anchor is the best
// match of some ground truth (ties to the lowest anchor index); negative if
// the best tIoU is below 0.3 and not positive; ignored otherwise. Positives
// regress to their own best-tIoU ground truth (ties to the lowest index).
std::vector<AnchorLabel> assign_labels(const AnchorGrid& anchors, std::span<const Segment> gts,
                                       LabelThresholds thresholds = {});

// ceil(M/2) positive and floor(M/2) negative anchor indices. Each pool is
// sampled without replacement when large enough, with replacement otherwise.
std::vector<std::size_t> sample_minibatch(std::span<const AnchorLabel> labels, std::size_t batch,
                                          std::mt19937_64& rng);

// (1/M) sum BCE(a_hat, a*) + a* (smoothL1(dc_hat - dc*) + smoothL1(dl_hat - dl*)).
ad::Tensor spn_loss(ad::Tape& tape, const SpnOutput& output, std::span<const AnchorLabel> labels,
                    std::span<const std::size_t> minibatch);

// Greedy suppression: keeps the best-scoring remaining proposal, drops every
// other proposal with tIoU above the threshold. Equal scores keep input order.
std::vector<Segment> nms(std::vector<Segment> proposals, double threshold = 0.7,
                         std::size_t keep_top = SIZE_MAX);

// Applies predicted offsets to every anchor, clips to [0, extent] and drops
// proposals that vanish after clipping. Scores come from the SPN output.
std::vector<Segment> decode_proposals(const AnchorGrid& anchors, const SpnOutput& output,
                                      double extent);

}  // namespace densecap
