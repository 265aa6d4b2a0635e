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

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "densecap/model/segment.hpp"

namespace densecap::synth {

enum class Pattern { blob, bar, checker };

struct MotifSpec {
  Pattern pattern = Pattern::blob;
  std::array<std::uint8_t, 3> rgb{};
  // Motion per frame in pixels (rows, columns); positions wrap around.
  double dy = 0.0;
  double dx = 0.0;
  std::string color;
  std::string shape;
  std::string direction;
};

// Every (color, shape) pair is unique, so the first three words of a caption
// identify the motif.
const std::vector<MotifSpec>& motif_library();
// Every word the grammar can produce, sorted.
std::vector<std::string> grammar_words();

// Caption of event t (0-based) given the motif ids of all events in
// ascending end-time order:
//   t = 0:                  the <color> <shape> moves <direction>
//   t > 0, new motif:       then the <color> <shape> moves <direction>
//   t > 0, same as t - 1:   then the same <shape> moves <direction>
std::vector<std::string> oracle_caption(std::span<const int> motifs, std::size_t t);

struct ParsedCaption {
  bool then = false;
  bool same = false;
  std::string color;  // empty when same
  std::string shape;
  std::string direction;
};
std::optional<ParsedCaption> parse_caption(const std::vector<std::string>& words);

// True when the wording of event t would change if its history were removed.
bool history_dependent(std::span<const int> motifs, std::size_t t);

struct CorpusConfig {
  std::size_t videos = 20;
  std::size_t frames = 128;
  std::size_t height = 16;
  std::size_t width = 16;
  double frame_rate = 8.0;
  // Frames per feature timestep; event lengths are whole timesteps.
  std::size_t frames_per_step = 8;
  std::size_t motifs = 4;
  std::size_t min_events = 3;
  std::size_t max_events = 4;
  std::size_t min_event_steps = 2;
  std::size_t max_event_steps = 8;
  // Chance that an event may overlap the one starting before it.
  double overlap_probability = 0.1;
  // Chance that an event repeats the previous motif.
  double repeat_probability = 0.5;
  double noise_sigma = 8.0;
  std::uint64_t seed = 0;
  std::size_t max_retries = 1000;
};

void to_json(nlohmann::json& j, const CorpusConfig& c);
void from_json(const nlohmann::json& j, CorpusConfig& c);

struct EventTrack {
  int motif = 0;
  std::size_t start_frame = 0;
  std::size_t end_frame = 0;  // exclusive
  std::array<double, 2> origin{};  // (row, column) at start_frame
};

// One captioned video. Pixels are 3 x frames x height x width, 8-bit. Events,
// segments, captions and motifs are in ascending end-time order.
struct VideoRecord {
  std::string id;
  std::size_t frames = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  double frame_rate = 8.0;
  std::vector<std::uint8_t> pixels;
  std::vector<Segment> segments;  // seconds
  std::vector<std::vector<std::string>> captions;
  std::vector<int> motifs;
  std::vector<EventTrack> events;

  double duration() const { return static_cast<double>(frames) / frame_rate; }
};

// Throws ContractError for configurations no video can satisfy and DataError
// when interval sampling keeps failing.
VideoRecord generate_video(const CorpusConfig& config, std::size_t index);
std::vector<VideoRecord> generate_corpus(const CorpusConfig& config);

// The motif drawn alone on a zero background: 3 x frames x H x W, signed.
std::vector<double> render_track(const EventTrack& track, const CorpusConfig& config);

struct AuditReport {
  std::size_t captions = 0;
  std::size_t history_dependent = 0;
  std::size_t unparsable = 0;
  std::size_t wrong_wording = 0;
  std::size_t missing_motif = 0;
  double min_motif_correlation = 1.0;
  double min_motif_separation = 0.0;
  std::vector<std::string> problems;

  double history_fraction() const;
  bool ok() const { return problems.empty(); }
};

// Checks grammar and wording of every caption, correlation of every segment
// with its motif, pairwise motif separation and the history-dependent share.
AuditReport audit(const CorpusConfig& config, const std::vector<VideoRecord>& videos,
                  double min_correlation = 0.3, double min_separation = 100.0,
                  double min_history_fraction = 0.1);

// Smallest mean squared per-pixel difference between any two motifs drawn
// with identical placement over the given number of frames.
double motif_separation(const CorpusConfig& config, std::size_t frames = 24);

// Raw tensor file: "DVT1", u32 rank, u64 dims, u8 dtype tag (1 = uint8),
// little-endian payload.
void write_raw_video(const std::filesystem::path& path, const VideoRecord& video);
std::vector<std::uint8_t> read_raw_video(const std::filesystem::path& path,
                                         std::array<std::size_t, 4>& dims);

// Dataset directory: annotations.json (ground-truth shape), manifest.json
// (config, per-video geometry, motifs and tracks) and videos/<id>.vt.
void write_dataset(const std::filesystem::path& root, const CorpusConfig& config,
                   const std::vector<VideoRecord>& videos);
// Generates, audits and writes. Returns the audit; the dataset is written
// only when it passes, otherwise DataError.
AuditReport generate(const CorpusConfig& config, const std::filesystem::path& root);

struct Dataset {
  nlohmann::json config;
  std::vector<VideoRecord> videos;
};
// Validates the manifest against annotations and raw files; DataError with
// the offending file otherwise.
Dataset load_dataset(const std::filesystem::path& root);

}  // namespace densecap::synth
