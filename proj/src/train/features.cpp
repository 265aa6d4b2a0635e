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

#include "densecap/util/io.hpp"
#include "internal.hpp"

namespace densecap::train {

namespace {
constexpr char kDumpMagic[] = "JEDF";
}

FeatureDump extract_gt_features(const Checkpoint& spn, const std::vector<PreparedVideo>& videos) {
  if (spn.stage != Stage::spn || !spn.complete) {
    throw ContractError("extract_gt_features: needs a finished spn checkpoint, got " +
                        to_string(spn.stage) + (spn.complete ? "" : " (unfinished)"));
  }
  const Model model = model_from(spn);
  FeatureDump d;
  d.vocab_words = model.vocab().words();
  d.dim = model.head().dim();
  d.max_len = model.config().captioner.max_len;
  for (const auto& v : videos) {
    ad::Tape tape(ad::Tape::Mode::inference);
    const FeatureMap features = model.encoder().encode(tape, v.video);
    const double extent = static_cast<double>(features.timesteps());
    const ContextVector ctx = model.head().context_vector(tape, features);
    d.contexts[v.id] = std::vector<double>(ctx.vector.values().begin(), ctx.vector.values().end());
    for (std::size_t t = 0; t < v.segments.size(); ++t) {
      Segment s = v.segments[t];
      if (s.start() < 0.0 || s.end() > extent) {
        spdlog::warn("{}: segment {} clipped to the feature extent", v.id, t);
        s = Segment::from_bounds(std::max(0.0, s.start()), std::min(extent, s.end()));
      }
      const ProposalFeature f = model.head().proposal_feature(tape, features, s);
      d.records.push_back({v.id, t, s, v.captions[t],
                           std::vector<double>(f.vector.values().begin(), f.vector.values().end())});
    }
  }
  return d;
}

std::string serialize_feature_dump(const FeatureDump& d) {
  nlohmann::json meta{{"vocab", d.vocab_words},
                      {"dim", d.dim},
                      {"max_len", d.max_len},
                      {"contexts", nlohmann::json::array()},
                      {"records", nlohmann::json::array()}};
  for (const auto& [id, c] : d.contexts) meta["contexts"].push_back(id);
  for (const auto& r : d.records) {
    meta["records"].push_back({{"video", r.video_id},
                               {"index", r.index},
                               {"segment", {r.segment.start(), r.segment.end()}},
                               {"caption", r.caption.ids}});
  }
  const std::string blob = meta.dump();
  detail::Writer w;
  w.bytes(std::string(kDumpMagic, 4));
  w.put<std::uint32_t>(FeatureDump::kFormatVersion);
  w.put<std::uint64_t>(blob.size());
  w.bytes(blob);
  for (const auto& [id, c] : d.contexts) {
    if (c.size() != d.dim) throw ContractError("feature dump: context of " + id + " has wrong size");
    w.doubles(c);
  }
  for (const auto& r : d.records) {
    if (r.feature.size() != d.dim) throw ContractError("feature dump: record of " + r.video_id + " has wrong size");
    w.doubles(r.feature);
  }
  return w.take();
}

FeatureDump deserialize_feature_dump(const std::string& bytes, const std::string& source) {
  detail::Reader r(bytes, source);
  if (r.bytes(4) != std::string(kDumpMagic, 4)) r.fail("not a feature dump (bad magic)");
  const auto version = r.get<std::uint32_t>();
  if (version != FeatureDump::kFormatVersion) r.fail("unsupported format version " + std::to_string(version));
  FeatureDump d;
  std::vector<std::string> context_ids;
  try {
    const auto meta = nlohmann::json::parse(r.bytes(r.get<std::uint64_t>()));
    d.vocab_words = meta.at("vocab").get<std::vector<std::string>>();
    d.dim = meta.at("dim").get<std::size_t>();
    d.max_len = meta.at("max_len").get<std::size_t>();
    context_ids = meta.at("contexts").get<std::vector<std::string>>();
    for (const auto& m : meta.at("records")) {
      FeatureRecord rec;
      rec.video_id = m.at("video").get<std::string>();
      rec.index = m.at("index").get<std::size_t>();
      rec.segment = Segment::from_bounds(m.at("segment").at(0).get<double>(), m.at("segment").at(1).get<double>());
      rec.caption.ids = m.at("caption").get<std::vector<int>>();
      d.records.push_back(std::move(rec));
    }
  } catch (const nlohmann::json::exception& e) {
    r.fail(std::string("bad header: ") + e.what());
  }
  for (const auto& id : context_ids) d.contexts[id] = r.doubles(d.dim);
  for (auto& rec : d.records) {
    rec.feature = r.doubles(d.dim);
    if (!d.contexts.count(rec.video_id)) r.fail("record for " + rec.video_id + " has no context");
  }
  if (!r.done()) r.fail("trailing bytes");
  return d;
}

void save_feature_dump(const std::filesystem::path& path, const FeatureDump& d) {
  write_file_atomic(path, serialize_feature_dump(d));
}

FeatureDump load_feature_dump(const std::filesystem::path& path) {
  return deserialize_feature_dump(read_file(path), path.string());
}

}  // namespace densecap::train
