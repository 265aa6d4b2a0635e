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

#include "densecap/eval/dense_eval.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>

#include "densecap/errors.hpp"

namespace densecap::eval {

namespace {

std::vector<std::size_t> by_score(const std::vector<Prediction>& preds) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return preds[a].score > preds[b].score; });
  return order;
}

std::string num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

nlohmann::json scores_json(const SentenceScores& s) {
  return {{"Bleu_1", s.bleu[0]}, {"Bleu_2", s.bleu[1]}, {"Bleu_3", s.bleu[2]},
          {"Bleu_4", s.bleu[3]}, {"METEOR_lite", s.meteor}, {"ROUGE_L", s.rouge_l},
          {"CIDEr", s.cider}};
}

void scores_csv(std::ostringstream& out, const std::string& key, const SentenceScores& s) {
  for (int n = 0; n < 4; ++n) out << "caption," << key << ",Bleu_" << n + 1 << ',' << num(s.bleu[static_cast<std::size_t>(n)]) << '\n';
  out << "caption," << key << ",METEOR_lite," << num(s.meteor) << '\n';
  out << "caption," << key << ",ROUGE_L," << num(s.rouge_l) << '\n';
  out << "caption," << key << ",CIDEr," << num(s.cider) << '\n';
}

[[noreturn]] void schema_error(const std::string& source, const std::string& where,
                               const std::string& what) {
  throw DataError(source + ": " + where + ": " + what);
}

Segment parse_timestamp(const nlohmann::json& j, const std::string& source,
                        const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    schema_error(source, where, "expected [start, end] in seconds");
  }
  const double s = j[0].get<double>(), e = j[1].get<double>();
  if (!(e > s)) schema_error(source, where, "segment end must exceed its start");
  return Segment::from_bounds(s, e);
}

}  // namespace

std::size_t greedy_matches(const std::vector<Segment>& preds, const std::vector<Segment>& gts,
                           double tiou_threshold) {
  struct Pair {
    double iou;
    std::size_t p, g;
  };
  std::vector<Pair> pairs;
  for (std::size_t p = 0; p < preds.size(); ++p)
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const double v = tiou(preds[p], gts[g]);
      if (v >= tiou_threshold && v > 0.0) pairs.push_back({v, p, g});
    }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const Pair& a, const Pair& b) { return a.iou > b.iou; });
  std::vector<bool> pred_used(preds.size(), false), gt_used(gts.size(), false);
  std::size_t matched = 0;
  for (const auto& pr : pairs) {
    if (pred_used[pr.p] || gt_used[pr.g]) continue;
    pred_used[pr.p] = gt_used[pr.g] = true;
    ++matched;
  }
  return matched;
}

std::vector<CurvePoint> recall_curve(const PredictionSet& preds, const GroundTruth& gts,
                                     double tiou_threshold, std::size_t max_proposals) {
  std::size_t total = 0;
  for (const auto& [id, v] : gts) total += v.segments.size();
  if (total == 0) throw ContractError("recall_curve: no ground-truth segments");
  if (max_proposals == 0) throw ContractError("recall_curve: proposal budget must be positive");
  std::map<std::string, std::vector<Segment>> ranked;
  for (const auto& [id, list] : preds) {
    if (!gts.count(id)) continue;
    for (std::size_t i : by_score(list)) ranked[id].push_back(list[i].segment);
  }
  std::vector<CurvePoint> curve;
  for (std::size_t n = 1; n <= max_proposals; ++n) {
    std::size_t matched = 0;
    for (const auto& [id, v] : gts) {
      auto it = ranked.find(id);
      if (it == ranked.end()) continue;
      std::vector<Segment> top(it->second.begin(),
                               it->second.begin() + static_cast<std::ptrdiff_t>(
                                                        std::min(n, it->second.size())));
      matched += greedy_matches(top, v.segments, tiou_threshold);
    }
    curve.push_back({n, static_cast<double>(matched) / static_cast<double>(total)});
  }
  return curve;
}

double auc(const std::vector<CurvePoint>& curve) {
  if (curve.empty()) throw ContractError("auc: empty curve");
  if (curve.size() == 1) return curve[0].recall;
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    area += 0.5 * (curve[i].recall + curve[i - 1].recall) *
            static_cast<double>(curve[i].proposals - curve[i - 1].proposals);
  }
  return area / static_cast<double>(curve.back().proposals - curve.front().proposals);
}

std::vector<double> proposal_thresholds() {
  std::vector<double> out;
  for (int i = 10; i <= 19; ++i) out.push_back(i / 20.0);
  return out;
}

ProposalReport evaluate_proposals(const PredictionSet& preds, const GroundTruth& gts,
                                  std::size_t max_proposals) {
  ProposalReport r;
  for (double t : proposal_thresholds()) {
    r.curves[t] = recall_curve(preds, gts, t, max_proposals);
    r.auc_at[t] = auc(r.curves[t]);
    r.avg_auc += r.auc_at[t];
  }
  r.avg_auc /= static_cast<double>(r.auc_at.size());
  return r;
}

CaptionReport dense_caption_eval(const PredictionSet& preds, const GroundTruth& gts,
                                 const DenseEvalOptions& options) {
  if (options.thresholds.empty()) throw ContractError("dense_caption_eval: no thresholds");
  struct Item {
    Tokens candidate;
    const std::string* video;
    Segment segment;
  };
  std::vector<Item> items;
  for (const auto& [id, list] : preds) {
    const auto order = by_score(list);
    for (std::size_t k = 0; k < order.size() && k < options.top_k; ++k) {
      const auto& p = list[order[k]];
      items.push_back({tokenize(p.sentence), &id, p.segment});
    }
  }
  std::map<std::string, std::vector<Tokens>> gt_tokens;
  for (const auto& [id, v] : gts)
    for (const auto& s : v.sentences) gt_tokens[id].push_back(tokenize(s));

  CaptionReport report;
  report.predictions = items.size();
  for (double alpha : options.thresholds) {
    std::vector<std::vector<Tokens>> refs(items.size());
    std::vector<std::vector<Tokens>> ref_sets;
    for (std::size_t i = 0; i < items.size(); ++i) {
      auto it = gts.find(*items[i].video);
      if (it == gts.end()) continue;
      for (std::size_t g = 0; g < it->second.segments.size(); ++g) {
        if (tiou(items[i].segment, it->second.segments[g]) >= alpha) {
          refs[i].push_back(gt_tokens[*items[i].video][g]);
        }
      }
      if (!refs[i].empty()) ref_sets.push_back(refs[i]);
    }
    // With fewer than two documents every idf weight is log(1) = 0.
    std::optional<CiderScorer> scorer;
    if (ref_sets.size() >= 2) scorer.emplace(ref_sets);

    SentenceScores sum;
    std::size_t counted = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (refs[i].empty()) {
        if (options.count_unmatched) ++counted;
        continue;
      }
      ++counted;
      for (int n = 1; n <= 4; ++n) {
        sum.bleu[static_cast<std::size_t>(n - 1)] += bleu_n(items[i].candidate, refs[i], n);
      }
      sum.meteor += meteor_lite(items[i].candidate, refs[i]);
      sum.rouge_l += rouge_l(items[i].candidate, refs[i]);
      if (scorer) sum.cider += scorer->score(items[i].candidate, refs[i]);
    }
    SentenceScores mean;
    if (counted > 0) {
      const double c = static_cast<double>(counted);
      for (std::size_t n = 0; n < 4; ++n) mean.bleu[n] = sum.bleu[n] / c;
      mean.meteor = sum.meteor / c;
      mean.rouge_l = sum.rouge_l / c;
      mean.cider = sum.cider / c;
    }
    report.at[alpha] = mean;
  }
  const double k = static_cast<double>(report.at.size());
  for (const auto& [alpha, s] : report.at) {
    for (std::size_t n = 0; n < 4; ++n) report.average.bleu[n] += s.bleu[n] / k;
    report.average.meteor += s.meteor / k;
    report.average.rouge_l += s.rouge_l / k;
    report.average.cider += s.cider / k;
  }
  return report;
}

GroundTruth parse_ground_truth(const nlohmann::json& j, const std::string& source) {
  if (!j.is_object()) schema_error(source, "top level", "expected an object keyed by video id");
  GroundTruth out;
  for (const auto& [id, v] : j.items()) {
    if (!v.is_object()) schema_error(source, id, "expected an object");
    GroundTruthVideo g;
    if (!v.contains("duration") || !v["duration"].is_number()) {
      schema_error(source, id + "/duration", "missing or not a number");
    }
    g.duration = v["duration"].get<double>();
    if (!v.contains("timestamps") || !v["timestamps"].is_array()) {
      schema_error(source, id + "/timestamps", "missing or not an array");
    }
    if (!v.contains("sentences") || !v["sentences"].is_array()) {
      schema_error(source, id + "/sentences", "missing or not an array");
    }
    if (v["timestamps"].size() != v["sentences"].size()) {
      schema_error(source, id, "timestamps and sentences differ in length");
    }
    for (std::size_t i = 0; i < v["timestamps"].size(); ++i) {
      const std::string where = id + "/timestamps[" + std::to_string(i) + "]";
      g.segments.push_back(parse_timestamp(v["timestamps"][i], source, where));
      const auto& s = v["sentences"][i];
      if (!s.is_string()) schema_error(source, id + "/sentences[" + std::to_string(i) + "]", "not a string");
      g.sentences.push_back(s.get<std::string>());
    }
    out[id] = std::move(g);
  }
  return out;
}

PredictionSet parse_predictions(const nlohmann::json& j, const std::string& source) {
  if (!j.is_object() || !j.contains("results") || !j["results"].is_object()) {
    schema_error(source, "top level", "expected {\"results\": {video_id: [...]}}");
  }
  PredictionSet out;
  for (const auto& [id, list] : j["results"].items()) {
    if (!list.is_array()) schema_error(source, "results/" + id, "expected an array");
    auto& dst = out[id];
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string where = "results/" + id + "[" + std::to_string(i) + "]";
      const auto& p = list[i];
      if (!p.is_object() || !p.contains("timestamp")) schema_error(source, where, "missing timestamp");
      Prediction pred;
      pred.segment = parse_timestamp(p["timestamp"], source, where + "/timestamp");
      if (p.contains("sentence")) {
        if (!p["sentence"].is_string()) schema_error(source, where + "/sentence", "not a string");
        pred.sentence = p["sentence"].get<std::string>();
      }
      if (p.contains("proposal_score")) {
        if (!p["proposal_score"].is_number()) {
          schema_error(source, where + "/proposal_score", "not a number");
        }
        pred.score = p["proposal_score"].get<double>();
      }
      pred.segment.score = pred.score;
      dst.push_back(std::move(pred));
    }
  }
  return out;
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

GroundTruth load_ground_truth(const std::filesystem::path& path) {
  return parse_ground_truth(read_json_file(path), path.string());
}

PredictionSet load_predictions(const std::filesystem::path& path) {
  return parse_predictions(read_json_file(path), path.string());
}

nlohmann::json to_json(const PredictionSet& p) {
  nlohmann::json results = nlohmann::json::object();
  for (const auto& [id, list] : p) {
    auto& dst = results[id] = nlohmann::json::array();
    for (const auto& pr : list) {
      dst.push_back({{"sentence", pr.sentence},
                     {"timestamp", {pr.segment.start(), pr.segment.end()}},
                     {"proposal_score", pr.score}});
    }
  }
  return {{"results", results}};
}

nlohmann::json to_json(const CaptionReport& r) {
  nlohmann::json j;
  for (const auto& [alpha, s] : r.at) j["per_tiou"][num(alpha)] = scores_json(s);
  j["average"] = scores_json(r.average);
  j["predictions"] = r.predictions;
  return j;
}

nlohmann::json to_json(const ProposalReport& r) {
  nlohmann::json j;
  for (const auto& [t, a] : r.auc_at) j["auc_at"][num(t)] = a;
  j["avg_auc"] = r.avg_auc;
  for (const auto& [t, c] : r.curves) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : c) pts.push_back({p.proposals, p.recall});
    j["recall_curves"][num(t)] = pts;
  }
  return j;
}

std::string to_csv(const CaptionReport& r) {
  std::ostringstream out;
  out << "section,tiou,metric,value\n";
  for (const auto& [alpha, s] : r.at) scores_csv(out, num(alpha), s);
  scores_csv(out, "average", r.average);
  return out.str();
}

std::string to_csv(const ProposalReport& r) {
  std::ostringstream out;
  out << "section,tiou,metric,value\n";
  for (const auto& [t, a] : r.auc_at) out << "proposal," << num(t) << ",AUC," << num(a) << '\n';
  out << "proposal,average,AUC," << num(r.avg_auc) << '\n';
  return out.str();
}

}  // namespace densecap::eval
