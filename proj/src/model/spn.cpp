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

#include "densecap/model/spn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "densecap/errors.hpp"
#include "densecap/tensor/ops.hpp"

namespace densecap {

double tiou(const Segment& a, const Segment& b) {
  const double inter = std::min(a.end(), b.end()) - std::max(a.start(), b.start());
  if (inter <= 0.0) return 0.0;
  const double uni = a.length + b.length - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

Segment AnchorGrid::at(std::size_t flat) const { return at(flat / positions, flat % positions); }

Segment AnchorGrid::at(std::size_t scale, std::size_t position) const {
  return {static_cast<double>(position) + 0.5, scales.at(scale), std::nullopt};
}

SegmentProposalNetwork::SegmentProposalNetwork(ad::ParamStore& params,
                                               std::size_t feature_channels,
                                               const SpnConfig& config, const std::string& prefix)
    : config_(config) {
  if (config.anchor_scales.empty()) throw ContractError("spn: no anchor scales");
  const std::size_t c = feature_channels;
  const std::size_t r = config.anchor_scales.size();
  auto add = [&](const std::string& name, ad::Shape shape, ad::Init init) {
    names_.push_back(prefix + "." + name);
    return params.add(prefix + "." + name, std::move(shape), init, true);
  };
  conv1_w_ = add("conv1.w", {c, c, 3, 3, 3}, ad::Init::he_uniform);
  conv1_b_ = add("conv1.b", {c}, ad::Init::zeros);
  conv2_w_ = add("conv2.w", {c, c, 3, 3, 3}, ad::Init::he_uniform);
  conv2_b_ = add("conv2.b", {c}, ad::Init::zeros);
  cls_w_ = add("cls.w", {r, c, 1, 1, 1}, ad::Init::fan_in_uniform);
  cls_b_ = add("cls.b", {r}, ad::Init::zeros);
  reg_w_ = add("reg.w", {2 * r, c, 1, 1, 1}, ad::Init::fan_in_uniform);
  reg_b_ = add("reg.b", {2 * r}, ad::Init::zeros);
}

SpnOutput SegmentProposalNetwork::forward(ad::Tape& tape, const FeatureMap& features) const {
  const auto& x = features.data;
  if (x.rank() != 4 || x.dim(1) == 0) throw ContractError("spn: feature map has no temporal extent");
  const std::size_t t = x.dim(1);
  ad::Tensor h = ad::relu(tape, ad::conv3d(tape, x, conv1_w_, conv1_b_, {1, 1, 1}, {1, 1, 1}));
  h = ad::relu(tape, ad::conv3d(tape, h, conv2_w_, conv2_b_, {1, 1, 1}, {1, 1, 1}));
  h = ad::maxpool3d(tape, h, {1, x.dim(2), x.dim(3)}, {1, x.dim(2), x.dim(3)});
  const std::size_t r = num_scales();
  ad::Tensor logits = ad::conv3d(tape, h, cls_w_, cls_b_);
  ad::Tensor scores = ad::sigmoid(tape, ad::reshape(tape, logits, {r, t}));
  ad::Tensor offsets = ad::reshape(tape, ad::conv3d(tape, h, reg_w_, reg_b_), {2 * r, t});
  return {scores, offsets};
}

RegressionTarget transform(const Segment& anchor, const Segment& gt) {
  if (!(anchor.length > 0.0) || !(gt.length > 0.0)) {
    throw ContractError("transform: segment lengths must be positive");
  }
  return {(gt.center - anchor.center) / anchor.length, std::log(gt.length / anchor.length)};
}

Segment inverse_transform(const Segment& anchor, double center_offset, double length_offset) {
  if (!(anchor.length > 0.0)) throw ContractError("inverse_transform: anchor length must be positive");
  return {anchor.center + center_offset * anchor.length, anchor.length * std::exp(length_offset),
          std::nullopt};
}

std::vector<AnchorLabel> assign_labels(const AnchorGrid& anchors, std::span<const Segment> gts,
                                       LabelThresholds thresholds) {
  if (gts.empty()) throw ContractError("assign_labels: no ground-truth segments");
  const std::size_t n = anchors.size();
  std::vector<double> best_iou(n, -1.0);
  std::vector<std::size_t> best_gt(n, 0);
  std::vector<double> gt_best_iou(gts.size(), -1.0);
  std::vector<std::size_t> gt_best_anchor(gts.size(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    const Segment a = anchors.at(i);
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const double v = tiou(a, gts[g]);
      if (v > best_iou[i]) {
        best_iou[i] = v;
        best_gt[i] = g;
      }
      if (v > gt_best_iou[g]) {
        gt_best_iou[g] = v;
        gt_best_anchor[g] = i;
      }
    }
  }
  std::vector<bool> positive(n, false);
  for (std::size_t i = 0; i < n; ++i) positive[i] = best_iou[i] > thresholds.positive;
  for (std::size_t g = 0; g < gts.size(); ++g) positive[gt_best_anchor[g]] = true;

  std::vector<AnchorLabel> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (positive[i]) {
      labels[i].kind = AnchorLabelKind::positive;
      labels[i].matched_gt = best_gt[i];
      labels[i].target = transform(anchors.at(i), gts[best_gt[i]]);
    } else if (best_iou[i] < thresholds.negative) {
      labels[i].kind = AnchorLabelKind::negative;
    }
  }
  return labels;
}

std::vector<std::size_t> sample_minibatch(std::span<const AnchorLabel> labels, std::size_t batch,
                                          std::mt19937_64& rng) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].kind == AnchorLabelKind::positive) pos.push_back(i);
    if (labels[i].kind == AnchorLabelKind::negative) neg.push_back(i);
  }
  if (pos.empty() || neg.empty()) {
    throw ContractError("sample_minibatch: need positives and negatives, have " +
                        std::to_string(pos.size()) + " positive and " +
                        std::to_string(neg.size()) + " negative anchors");
  }
  if (batch < 2) throw ContractError("sample_minibatch: batch size must be at least 2");
  auto draw = [&rng](std::vector<std::size_t>& pool, std::size_t count,
                     std::vector<std::size_t>& out) {
    if (pool.size() >= count) {
      // Partial Fisher-Yates.
      for (std::size_t i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
        out.push_back(pool[i]);
      }
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      for (std::size_t i = 0; i < count; ++i) out.push_back(pool[pick(rng)]);
    }
  };
  std::vector<std::size_t> out;
  out.reserve(batch);
  const std::size_t n_pos = (batch + 1) / 2;
  draw(pos, n_pos, out);
  draw(neg, batch - n_pos, out);
  return out;
}

ad::Tensor spn_loss(ad::Tape& tape, const SpnOutput& output, std::span<const AnchorLabel> labels,
                    std::span<const std::size_t> minibatch) {
  if (minibatch.empty()) throw ContractError("spn_loss: empty minibatch");
  const std::size_t t = output.scores.dim(1);
  std::vector<double> cls_targets;
  std::vector<std::size_t> reg_index;
  std::vector<double> reg_targets;
  for (std::size_t i : minibatch) {
    const AnchorLabel& l = labels[i];
    const bool pos = l.kind == AnchorLabelKind::positive;
    if (!pos && l.kind != AnchorLabelKind::negative) {
      throw ContractError("spn_loss: minibatch contains an ignored anchor");
    }
    cls_targets.push_back(pos ? 1.0 : 0.0);
    if (pos) {
      const std::size_t scale = i / t, p = i % t;
      reg_index.push_back((2 * scale) * t + p);
      reg_targets.push_back(l.target->center);
      reg_index.push_back((2 * scale + 1) * t + p);
      reg_targets.push_back(l.target->length);
    }
  }
  ad::Tensor probs = ad::gather(tape, output.scores, minibatch);
  ad::Tensor total = ad::sum(tape, ad::binary_cross_entropy(tape, probs, cls_targets));
  if (!reg_index.empty()) {
    ad::Tensor pred = ad::gather(tape, output.offsets, reg_index);
    ad::Tensor diff = ad::sub(tape, pred, ad::Tensor({reg_targets.size()}, reg_targets));
    total = ad::add(tape, total, ad::sum(tape, ad::smooth_l1(tape, diff)));
  }
  return ad::scale(tape, total, 1.0 / static_cast<double>(minibatch.size()));
}

std::vector<Segment> nms(std::vector<Segment> proposals, double threshold, std::size_t keep_top) {
  for (const auto& p : proposals) {
    if (!p.score) throw ContractError("nms: proposal without a score");
  }
  std::stable_sort(proposals.begin(), proposals.end(),
                   [](const Segment& a, const Segment& b) { return *a.score > *b.score; });
  std::vector<Segment> kept;
  for (const auto& p : proposals) {
    if (kept.size() >= keep_top) break;
    bool suppressed = false;
    for (const auto& k : kept) {
      if (tiou(p, k) > threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(p);
  }
  return kept;
}

std::vector<Segment> decode_proposals(const AnchorGrid& anchors, const SpnOutput& output,
                                      double extent) {
  const std::size_t t = anchors.positions;
  auto sv = output.scores.values();
  auto ov = output.offsets.values();
  std::vector<Segment> out;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const std::size_t r = i / t, p = i % t;
    // Guard exp() against early-training outliers.
    const double dl = std::clamp(ov[(2 * r + 1) * t + p], -10.0, 10.0);
    Segment s = inverse_transform(anchors.at(i), ov[(2 * r) * t + p], dl);
    const double start = std::max(0.0, s.start());
    const double end = std::min(extent, s.end());
    if (!(end - start > 1e-6)) continue;
    out.push_back(Segment::from_bounds(start, end, sv[i]));
  }
  return out;
}

}  // namespace densecap
