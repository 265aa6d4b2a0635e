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

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "densecap/eval/metrics.hpp"
#include "densecap/model/segment.hpp"

namespace densecap::eval {

// Ground truth for one video; segments are in seconds.
struct GroundTruthVideo {
  double duration = 0.0;
  std::vector<Segment> segments;
  std::vector<std::string> sentences;
};
using GroundTruth = std::map<std::string, GroundTruthVideo>;

struct Prediction {
  Segment segment;  // seconds
  std::string sentence;
  double score = 0.0;
};
// Per video, in file order.
using PredictionSet = std::map<std::string, std::vector<Prediction>>;

struct CurvePoint {
  std::size_t proposals = 0;  // per video
  double recall = 0.0;
};

// Recall against all ground-truth segments when each video keeps its top-n
// predictions by score (stable for ties), for n = 1..max_proposals. Matching
// is one-to-one and greedy by descending tIoU; pairs below the threshold never
// match.
std::vector<CurvePoint> recall_curve(const PredictionSet& preds, const GroundTruth& gts,
                                     double tiou_threshold, std::size_t max_proposals);

// Normalized trapezoid area under recall over n = 1..max; a single point
// returns its recall.
double auc(const std::vector<CurvePoint>& curve);

// Matches between the top-n predictions of one video and its ground truth.
std::size_t greedy_matches(const std::vector<Segment>& preds, const std::vector<Segment>& gts,
                           double tiou_threshold);

struct ProposalReport {
  std::map<double, double> auc_at;
  double avg_auc = 0.0;
  std::map<double, std::vector<CurvePoint>> curves;
};

// tIoU grid 0.5, 0.55, ..., 0.95.
std::vector<double> proposal_thresholds();
ProposalReport evaluate_proposals(const PredictionSet& preds, const GroundTruth& gts,
                                  std::size_t max_proposals = 100);

struct CaptionReport {
  std::map<double, SentenceScores> at;
  SentenceScores average;
  std::size_t predictions = 0;
};

struct DenseEvalOptions {
  std::vector<double> thresholds{0.3, 0.5, 0.7, 0.9};
  std::size_t top_k = 1000;
  // Predictions without any reference in range count as 0 when true and are
  // left out of the mean otherwise.
  bool count_unmatched = true;
};

// For every threshold, each kept prediction is scored against all ground
// truth sentences of its video whose segment reaches the tIoU threshold; the
// per-threshold value is the mean over predictions.
CaptionReport dense_caption_eval(const PredictionSet& preds, const GroundTruth& gts,
                                 const DenseEvalOptions& options = {});

GroundTruth parse_ground_truth(const nlohmann::json& j, const std::string& source = "ground truth");
PredictionSet parse_predictions(const nlohmann::json& j, const std::string& source = "predictions");
// Parse errors carry the file name, line and column.
nlohmann::json read_json_file(const std::filesystem::path& path);
GroundTruth load_ground_truth(const std::filesystem::path& path);
PredictionSet load_predictions(const std::filesystem::path& path);

// {"results": {id: [{sentence, timestamp, proposal_score}]}}
nlohmann::json to_json(const PredictionSet& p);
nlohmann::json to_json(const CaptionReport& r);
nlohmann::json to_json(const ProposalReport& r);
// Flat "section,threshold,metric,value" rows.
std::string to_csv(const CaptionReport& r);
std::string to_csv(const ProposalReport& r);

}  // namespace densecap::eval
