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

#include <cstring>

#include <spdlog/spdlog.h>

#include "densecap/errors.hpp"
#include "densecap/eval/dense_eval.hpp"
#include "densecap/synth/synthdata.hpp"
#include "densecap/util/io.hpp"

namespace densecap::synth {

namespace {

constexpr char kMagic[4] = {'D', 'V', 'T', '1'};
constexpr std::uint8_t kDtypeU8 = 1;
constexpr int kManifestVersion = 1;

template <typename T>
void put_le(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(const std::string& in, std::size_t& pos, const std::filesystem::path& path) {
  if (pos + sizeof(T) > in.size()) throw DataError(path.string() + ": truncated header");
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<T>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  pos += sizeof(T);
  return v;
}

std::string join(const std::vector<std::string>& words) {
  std::string s;
  for (const auto& w : words) {
    if (!s.empty()) s += ' ';
    s += w;
  }
  return s;
}

}  // namespace

void write_raw_video(const std::filesystem::path& path, const VideoRecord& v) {
  if (v.pixels.size() != 3 * v.frames * v.height * v.width) {
    throw ContractError("write_raw_video: pixel count does not match the geometry of " + v.id);
  }
  std::string out(kMagic, 4);
  put_le<std::uint32_t>(out, 4);
  for (std::uint64_t d : {std::uint64_t{3}, std::uint64_t{v.frames}, std::uint64_t{v.height},
                          std::uint64_t{v.width}}) {
    put_le(out, d);
  }
  out.push_back(static_cast<char>(kDtypeU8));
  out.append(reinterpret_cast<const char*>(v.pixels.data()), v.pixels.size());
  write_file_atomic(path, out);
}

std::vector<std::uint8_t> read_raw_video(const std::filesystem::path& path,
                                         std::array<std::size_t, 4>& dims) {
  const std::string in = read_file(path);
  if (in.size() < 4 || std::memcmp(in.data(), kMagic, 4) != 0) {
    throw DataError(path.string() + ": not a raw video file");
  }
  std::size_t pos = 4;
  const auto rank = get_le<std::uint32_t>(in, pos, path);
  if (rank != 4) throw DataError(path.string() + ": expected rank 4, got " + std::to_string(rank));
  std::size_t total = 1;
  for (auto& d : dims) {
    d = static_cast<std::size_t>(get_le<std::uint64_t>(in, pos, path));
    total *= d;
  }
  if (dims[0] != 3) throw DataError(path.string() + ": expected 3 channels");
  const auto dtype = get_le<std::uint8_t>(in, pos, path);
  if (dtype != kDtypeU8) throw DataError(path.string() + ": unsupported dtype tag " + std::to_string(dtype));
  if (in.size() - pos != total) {
    throw DataError(path.string() + ": payload holds " + std::to_string(in.size() - pos) +
                    " bytes, header promises " + std::to_string(total));
  }
  return {in.begin() + static_cast<std::ptrdiff_t>(pos), in.end()};
}

void write_dataset(const std::filesystem::path& root, const CorpusConfig& config,
                   const std::vector<VideoRecord>& videos) {
  nlohmann::json annotations = nlohmann::json::object();
  nlohmann::json manifest{{"format", "densecap-synth"}, {"version", kManifestVersion},
                          {"config", config}, {"videos", nlohmann::json::array()}};
  for (const auto& v : videos) {
    nlohmann::json a{{"duration", v.duration()},
                     {"timestamps", nlohmann::json::array()},
                     {"sentences", nlohmann::json::array()}};
    for (std::size_t t = 0; t < v.segments.size(); ++t) {
      a["timestamps"].push_back({v.segments[t].start(), v.segments[t].end()});
      a["sentences"].push_back(join(v.captions[t]));
    }
    annotations[v.id] = a;
    nlohmann::json m{{"id", v.id},
                     {"file", "videos/" + v.id + ".vt"},
                     {"frames", v.frames},
                     {"height", v.height},
                     {"width", v.width},
                     {"frame_rate", v.frame_rate},
                     {"motifs", v.motifs},
                     {"events", nlohmann::json::array()}};
    for (const auto& e : v.events) {
      m["events"].push_back({{"motif", e.motif},
                             {"start_frame", e.start_frame},
                             {"end_frame", e.end_frame},
                             {"origin", e.origin}});
    }
    manifest["videos"].push_back(m);
    write_raw_video(root / "videos" / (v.id + ".vt"), v);
  }
  write_file_atomic(root / "annotations.json", annotations.dump(1) + "\n");
  write_file_atomic(root / "manifest.json", manifest.dump(1) + "\n");
}

AuditReport generate(const CorpusConfig& config, const std::filesystem::path& root) {
  const auto videos = generate_corpus(config);
  AuditReport report = audit(config, videos);
  if (!report.ok()) {
    std::string msg = "synth: generated corpus failed its audit:";
    for (const auto& p : report.problems) msg += "\n  " + p;
    throw DataError(msg);
  }
  write_dataset(root, config, videos);
  spdlog::info("synth: wrote {} videos, {} captions ({:.0f}% history-dependent) to {}",
               videos.size(), report.captions, 100 * report.history_fraction(), root.string());
  return report;
}

Dataset load_dataset(const std::filesystem::path& root) {
  const auto manifest_path = root / "manifest.json";
  const nlohmann::json manifest = eval::read_json_file(manifest_path);
  const std::string src = manifest_path.string();
  auto fail = [&](const std::string& where, const std::string& msg) -> void {
    throw DataError(src + ": " + where + ": " + msg);
  };
  if (!manifest.is_object() || manifest.value("format", "") != "densecap-synth") {
    fail("top level", "not a dataset manifest");
  }
  if (manifest.value("version", 0) != kManifestVersion) fail("version", "unsupported format version");
  if (!manifest.contains("videos") || !manifest["videos"].is_array()) fail("videos", "missing array");

  const eval::GroundTruth gts = eval::load_ground_truth(root / "annotations.json");
  Dataset ds;
  ds.config = manifest.value("config", nlohmann::json::object());
  for (std::size_t i = 0; i < manifest["videos"].size(); ++i) {
    const auto& m = manifest["videos"][i];
    const std::string where = "videos[" + std::to_string(i) + "]";
    VideoRecord v;
    try {
      v.id = m.at("id").get<std::string>();
      v.frames = m.at("frames").get<std::size_t>();
      v.height = m.at("height").get<std::size_t>();
      v.width = m.at("width").get<std::size_t>();
      v.frame_rate = m.at("frame_rate").get<double>();
      v.motifs = m.value("motifs", std::vector<int>{});
      for (const auto& e : m.value("events", nlohmann::json::array())) {
        v.events.push_back({e.at("motif").get<int>(), e.at("start_frame").get<std::size_t>(),
                            e.at("end_frame").get<std::size_t>(),
                            e.at("origin").get<std::array<double, 2>>()});
      }
    } catch (const nlohmann::json::exception& e) {
      fail(where, e.what());
    }
    if (v.frame_rate <= 0.0) fail(where + "/frame_rate", "must be positive");
    auto it = gts.find(v.id);
    if (it == gts.end()) fail(where, "video " + v.id + " has no annotations");
    for (std::size_t t = 0; t < it->second.segments.size(); ++t) {
      v.segments.push_back(it->second.segments[t]);
      v.captions.push_back(eval::tokenize(it->second.sentences[t]));
      if (v.captions.back().empty()) {
        fail(where, "video " + v.id + " has an empty sentence at index " + std::to_string(t));
      }
    }
    std::array<std::size_t, 4> dims{};
    v.pixels = read_raw_video(root / m.value("file", "videos/" + v.id + ".vt"), dims);
    if (dims[1] != v.frames || dims[2] != v.height || dims[3] != v.width) {
      fail(where, "raw file geometry differs from the manifest for " + v.id);
    }
    ds.videos.push_back(std::move(v));
  }
  if (ds.videos.size() != gts.size()) {
    throw DataError((root / "annotations.json").string() + ": holds " + std::to_string(gts.size()) +
                    " videos but the manifest lists " + std::to_string(ds.videos.size()));
  }
  return ds;
}

}  // namespace densecap::synth
