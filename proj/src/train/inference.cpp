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

#include "internal.hpp"

namespace densecap::train {

namespace {

std::vector<std::vector<std::string>> decode(const Model& model, ad::Tape& tape,
                                             const FeatureMap& features,
                                             const std::vector<Segment>& segments) {
  std::vector<ProposalFeature> feats;
  feats.reserve(segments.size());
  for (const auto& s : segments) feats.push_back(model.head().proposal_feature(tape, features, s));
  const ContextVector ctx = model.head().context_vector(tape, features);
  std::vector<std::vector<std::string>> out;
  for (const Caption& c : model.captioner().decode_greedy(tape, feats, ctx)) {
    out.push_back(model.vocab().decode(c.ids));
  }
  return out;
}

}  // namespace

std::vector<eval::Prediction> infer_video(const Model& model, const PreparedVideo& video,
                                          const InferenceOptions& options) {
  ad::Tape tape(ad::Tape::Mode::inference);
  const FeatureMap features = model.encoder().encode(tape, video.video);
  const SpnOutput out = model.spn().forward(tape, features);
  const double extent = static_cast<double>(features.timesteps());
  auto proposals = decode_proposals(model.spn().grid(features.timesteps()), out, extent);
  const auto kept = nms(std::move(proposals), options.nms_threshold, options.top_k);
  const auto captions = decode(model, tape, features, kept);
  std::vector<eval::Prediction> preds;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    const double s = std::clamp(kept[i].start() / video.timesteps_per_second, 0.0, video.duration);
    const double e = std::clamp(kept[i].end() / video.timesteps_per_second, 0.0, video.duration);
    preds.push_back({Segment::from_bounds(s, e), join_words(captions[i]), kept[i].score.value_or(0.0)});
  }
  return preds;
}

eval::PredictionSet infer(const Model& model, const std::vector<PreparedVideo>& videos,
                          const InferenceOptions& options) {
  eval::PredictionSet out;
  for (const auto& v : videos) out[v.id] = infer_video(model, v, options);
  return out;
}

std::vector<std::vector<std::string>> caption_segments(const Model& model, const PreparedVideo& video,
                                                       const std::vector<Segment>& segments) {
  ad::Tape tape(ad::Tape::Mode::inference);
  const FeatureMap features = model.encoder().encode(tape, video.video);
  return decode(model, tape, features, segments);
}

}  // namespace densecap::train
