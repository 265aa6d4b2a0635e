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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "densecap/errors.hpp"
#include "densecap/synth/synthdata.hpp"
#include "densecap/util/io.hpp"

using namespace densecap;
using namespace densecap::synth;
namespace fs = std::filesystem;

namespace {

std::string join(const std::vector<std::string>& w) {
  std::string s;
  for (const auto& x : w) s += (s.empty() ? "" : " ") + x;
  return s;
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("densecap_synth_test_" + name);
  fs::remove_all(p);
  return p;
}

std::map<std::string, std::string> tree_bytes(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_file(e.path());
  }
  return out;
}

}  // namespace

TEST(Grammar, FirstEventHasNoHistoryWords) {
  for (int m = 0; m < 8; ++m) {
    const int seq[] = {m};
    auto w = oracle_caption(seq, 0);
    EXPECT_EQ(std::count(w.begin(), w.end(), "then"), 0);
    EXPECT_EQ(std::count(w.begin(), w.end(), "same"), 0);
  }
}

TEST(Grammar, RepeatSaysSame) {
  const int seq[] = {2, 2};
  EXPECT_EQ(join(oracle_caption(seq, 1)), "then the same checker moves left");
}

TEST(Grammar, ExhaustiveLengthThreeTable) {
  const char* first[4] = {"the red blob moves right", "the blue bar moves down",
                          "the green checker moves left", "the yellow blob moves up"};
  // follow[prev][cur]
  const char* follow[4][4] = {
      {"then the same blob moves right", "then the blue bar moves down",
       "then the green checker moves left", "then the yellow blob moves up"},
      {"then the red blob moves right", "then the same bar moves down",
       "then the green checker moves left", "then the yellow blob moves up"},
      {"then the red blob moves right", "then the blue bar moves down",
       "then the same checker moves left", "then the yellow blob moves up"},
      {"then the red blob moves right", "then the blue bar moves down",
       "then the green checker moves left", "then the same blob moves up"},
  };
  std::size_t same = 0;
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      for (int c = 0; c < 4; ++c) {
        const int seq[] = {a, b, c};
        EXPECT_EQ(join(oracle_caption(seq, 0)), first[a]);
        EXPECT_EQ(join(oracle_caption(seq, 1)), follow[a][b]);
        EXPECT_EQ(join(oracle_caption(seq, 2)), follow[b][c]);
        for (std::size_t t = 0; t < 3; ++t) {
          auto p = parse_caption(oracle_caption(seq, t));
          ASSERT_TRUE(p.has_value());
          same += p->same;
          EXPECT_EQ(p->then, t > 0);
          EXPECT_EQ(history_dependent(seq, t), t > 0);
        }
      }
    }
  }
  // 16 sequences repeat at position 1 and 16 at position 2.
  EXPECT_EQ(same, 32u);
}

TEST(Grammar, IdenticalMotifsDifferByHistory) {
  const int a[] = {0, 1}, b[] = {1, 1};
  EXPECT_NE(oracle_caption(a, 1), oracle_caption(b, 1));
  const int c[] = {1};
  EXPECT_NE(oracle_caption(a, 1), oracle_caption(c, 0));
}

TEST(Grammar, ParserRejectsMalformed) {
  for (const char* s : {"", "the", "red blob moves right", "the same blob moves right",
                        "then the purple blob moves right", "the red blob moves right now",
                        "then then the red blob moves right", "the red moves right",
                        "the red blob goes right"}) {
    std::vector<std::string> words;
    std::string cur;
    for (char ch : std::string(s) + " ") {
      if (ch == ' ') {
        if (!cur.empty()) words.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    EXPECT_FALSE(parse_caption(words).has_value()) << s;
  }
  EXPECT_THROW(oracle_caption(std::vector<int>{0}, 1), ContractError);
  EXPECT_THROW(oracle_caption(std::vector<int>{9}, 0), ContractError);
}

TEST(Grammar, LibraryIsIdentifiable) {
  std::set<std::pair<std::string, std::string>> keys;
  for (const auto& m : motif_library()) keys.insert({m.color, m.shape});
  EXPECT_EQ(keys.size(), motif_library().size());
  EXPECT_LE(grammar_words().size(), 21u);
}

TEST(Synth, DefaultCorpusPassesAudit) {
  CorpusConfig c;
  auto videos = generate_corpus(c);
  ASSERT_EQ(videos.size(), 20u);
  auto r = audit(c, videos);
  for (const auto& p : r.problems) ADD_FAILURE() << p;
  EXPECT_GE(r.history_fraction(), 0.1);
  EXPECT_GE(r.min_motif_correlation, 0.3);
  EXPECT_GE(r.min_motif_separation, 100.0);
  for (const auto& v : videos) {
    EXPECT_GE(v.segments.size(), 3u);
    EXPECT_EQ(v.pixels.size(), 3u * 128 * 16 * 16);
    for (std::size_t t = 0; t < v.segments.size(); ++t) {
      const double steps = v.segments[t].length;  // one second is one timestep
      EXPECT_GE(steps, 2.0);
      EXPECT_LE(steps, 8.0);
      EXPECT_GE(v.segments[t].start(), 0.0);
      EXPECT_LE(v.segments[t].end(), v.duration());
      if (t > 0) {
        EXPECT_LE(v.segments[t - 1].end(), v.segments[t].end());
      }
    }
  }
}

TEST(Synth, SeedDeterminesCorpus) {
  CorpusConfig c;
  c.videos = 4;
  auto a = generate_corpus(c), b = generate_corpus(c);
  c.seed = 1;
  auto d = generate_corpus(c);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].pixels, b[i].pixels);
    EXPECT_EQ(a[i].captions, b[i].captions);
    EXPECT_NE(a[i].pixels, d[i].pixels);
  }
  // Videos do not depend on the corpus size.
  c.seed = 0;
  c.videos = 2;
  EXPECT_EQ(generate_corpus(c)[1].pixels, a[1].pixels);
}

TEST(Synth, NoOverlapWhenDisabled) {
  CorpusConfig c;
  c.videos = 200;
  c.overlap_probability = 0.0;
  for (const auto& v : generate_corpus(c)) {
    for (std::size_t i = 0; i < v.segments.size(); ++i) {
      for (std::size_t j = i + 1; j < v.segments.size(); ++j) {
        EXPECT_EQ(tiou(v.segments[i], v.segments[j]), 0.0) << v.id;
      }
    }
  }
}

TEST(Synth, OverlapsOccurWhenEnabled) {
  CorpusConfig c;
  c.videos = 200;
  c.overlap_probability = 1.0;
  std::size_t overlapping = 0;
  for (const auto& v : generate_corpus(c)) {
    for (std::size_t i = 0; i + 1 < v.segments.size(); ++i) {
      overlapping += tiou(v.segments[i], v.segments[i + 1]) > 0.0;
    }
  }
  EXPECT_GT(overlapping, 20u);
}

TEST(Synth, RejectsImpossibleConfigs) {
  CorpusConfig c;
  c.motifs = 9;
  EXPECT_THROW(generate_video(c, 0), ContractError);
  c = {};
  c.overlap_probability = 0.0;
  c.max_events = 5;
  c.min_event_steps = 4;
  EXPECT_THROW(generate_video(c, 0), ContractError);
  c = {};
  c.frames = 90;
  EXPECT_THROW(generate_video(c, 0), ContractError);
}

TEST(Synth, NoiseFreeVideoIsBackgroundOutsideEvents) {
  CorpusConfig c;
  c.noise_sigma = 0.0;
  auto v = generate_video(c, 3);
  const std::size_t plane = 128 * 16 * 16;
  for (std::size_t f = 0; f < 128; ++f) {
    bool inside = false;
    for (const auto& e : v.events) inside |= f >= e.start_frame && f < e.end_frame;
    if (inside) continue;
    for (std::size_t ch = 0; ch < 3; ++ch) {
      for (std::size_t p = 0; p < 256; ++p) ASSERT_EQ(v.pixels[ch * plane + f * 256 + p], 128);
    }
  }
}

TEST(Dataset, RawFileRoundTrip) {
  auto dir = scratch("raw");
  auto v = generate_video(CorpusConfig{}, 0);
  write_raw_video(dir / "a.vt", v);
  std::array<std::size_t, 4> dims{};
  EXPECT_EQ(read_raw_video(dir / "a.vt", dims), v.pixels);
  EXPECT_EQ(dims, (std::array<std::size_t, 4>{3, 128, 16, 16}));

  std::string bytes = read_file(dir / "a.vt");
  write_file_atomic(dir / "short.vt", bytes.substr(0, bytes.size() - 1));
  EXPECT_THROW(read_raw_video(dir / "short.vt", dims), DataError);
  bytes[0] = 'X';
  write_file_atomic(dir / "bad.vt", bytes);
  EXPECT_THROW(read_raw_video(dir / "bad.vt", dims), DataError);
  fs::remove_all(dir);
}

TEST(Dataset, WriteLoadRoundTrip) {
  auto dir = scratch("roundtrip");
  CorpusConfig c;
  c.videos = 5;
  generate(c, dir);
  auto ds = load_dataset(dir);
  auto ref = generate_corpus(c);
  ASSERT_EQ(ds.videos.size(), 5u);
  EXPECT_EQ(ds.config.at("videos"), 5);
  for (std::size_t i = 0; i < 5; ++i) {
    const auto& a = ds.videos[i];
    const auto& b = ref[i];
    EXPECT_EQ(a.id, b.id);
    EXPECT_EQ(a.pixels, b.pixels);
    EXPECT_EQ(a.captions, b.captions);
    EXPECT_EQ(a.motifs, b.motifs);
    ASSERT_EQ(a.segments.size(), b.segments.size());
    for (std::size_t t = 0; t < a.segments.size(); ++t) {
      EXPECT_EQ(a.segments[t].start(), b.segments[t].start());
      EXPECT_EQ(a.segments[t].end(), b.segments[t].end());
      EXPECT_EQ(a.events[t].origin, b.events[t].origin);
    }
  }
  fs::remove_all(dir);
}

TEST(Dataset, RegenerationIsByteIdentical) {
  auto a = scratch("regen_a"), b = scratch("regen_b");
  CorpusConfig c;
  c.videos = 3;
  c.seed = 7;
  generate(c, a);
  generate(c, b);
  EXPECT_EQ(tree_bytes(a), tree_bytes(b));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Dataset, InconsistentDatasetRejected) {
  auto dir = scratch("broken");
  CorpusConfig c;
  c.videos = 2;
  generate(c, dir);
  std::string ann = read_file(dir / "annotations.json");
  write_file_atomic(dir / "annotations.json", "{}");
  try {
    load_dataset(dir);
    ADD_FAILURE() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("synth_0000"), std::string::npos) << e.what();
  }
  write_file_atomic(dir / "annotations.json", ann);
  fs::remove(dir / "videos" / "synth_0001.vt");
  EXPECT_THROW(load_dataset(dir), DataError);
  EXPECT_THROW(load_dataset(dir / "missing"), DataError);
  fs::remove_all(dir);
}

TEST(Dataset, UnwritablePathFails) {
  CorpusConfig c;
  c.videos = 1;
  EXPECT_THROW(generate(c, "/proc/densecap_cannot_write_here"), DataError);
}

TEST(Synth, AuditFlagsMissingMotif) {
  CorpusConfig c;
  c.videos = 2;
  auto videos = generate_corpus(c);
  // Move the first event to a different place in the frame.
  videos[0].events[0].origin[0] += 8;
  videos[0].events[0].origin[1] += 8;
  auto r = audit(c, videos);
  EXPECT_EQ(r.missing_motif, 1u);
  EXPECT_LT(r.min_motif_correlation, 0.3);
  videos = generate_corpus(c);
  videos[1].captions[1][0] = "than";
  r = audit(c, videos);
  EXPECT_EQ(r.unparsable, 1u);
  EXPECT_FALSE(r.ok());
}
