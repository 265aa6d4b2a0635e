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

#include <spdlog/spdlog.h>

#include "internal.hpp"

namespace densecap::train {

std::string join_words(const std::vector<std::string>& words) {
  std::string s;
  for (const auto& w : words) {
    if (!s.empty()) s += ' ';
    s += w;
  }
  return s;
}

Vocabulary build_vocabulary(const std::vector<synth::VideoRecord>& videos) {
  std::vector<std::vector<std::string>> sentences;
  for (const auto& v : videos) sentences.insert(sentences.end(), v.captions.begin(), v.captions.end());
  return Vocabulary::build(sentences, 1);
}

std::vector<PreparedVideo> prepare(const std::vector<synth::VideoRecord>& videos,
                                   const Vocabulary& vocab, const ModelConfig& model) {
  std::size_t time_stride = 1, space_stride = 1;
  for (const auto& p : model.encoder.pools) {
    time_stride *= p.t;
    space_stride *= p.h;
  }
  std::vector<PreparedVideo> out;
  out.reserve(videos.size());
  for (const auto& v : videos) {
    if (v.segments.empty()) throw DataError(v.id + ": video has no ground-truth segments");
    PreparedVideo p;
    p.id = v.id;
    p.video = video_from_u8(v.pixels, v.frames, v.height, v.width, v.frame_rate, v.id, time_stride,
                            space_stride);
    p.duration = v.duration();
    p.timesteps_per_second = v.frame_rate / static_cast<double>(time_stride);
    const double extent = static_cast<double>(p.video.frames() / time_stride);
    std::vector<Segment> steps;
    for (std::size_t t = 0; t < v.segments.size(); ++t) {
      double s = v.segments[t].start() * p.timesteps_per_second;
      double e = v.segments[t].end() * p.timesteps_per_second;
      if (s < 0.0 || e > extent) {
        spdlog::warn("{}: segment {} [{}, {}] clipped to the video", v.id, t, v.segments[t].start(),
                     v.segments[t].end());
        s = std::max(s, 0.0);
        e = std::min(e, extent);
      }
      if (e <= s) throw DataError(v.id + ": segment " + std::to_string(t) + " is empty");
      steps.push_back(Segment::from_bounds(s, e));
    }
    for (std::size_t i : end_time_order(steps)) {
      p.segments.push_back(steps[i]);
      p.words.push_back(v.captions[i]);
      p.captions.push_back(Caption::from_words(vocab, v.captions[i], model.captioner.max_len));
    }
    out.push_back(std::move(p));
  }
  return out;
}

eval::GroundTruth ground_truth(const std::vector<synth::VideoRecord>& videos) {
  eval::GroundTruth g;
  for (const auto& v : videos) {
    auto& dst = g[v.id];
    dst.duration = v.duration();
    dst.segments = v.segments;
    for (const auto& c : v.captions) dst.sentences.push_back(join_words(c));
  }
  return g;
}

}  // namespace densecap::train
