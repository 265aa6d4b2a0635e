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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "densecap/errors.hpp"
#include "densecap/eval/dense_eval.hpp"

using namespace densecap;
using namespace densecap::eval;

namespace {

Tokens t(const std::string& s) { return tokenize(s); }

constexpr double kTol = 1e-9;

// Unpruned enumeration of every one-to-one exact alignment.
Alignment brute_align(const Tokens& c, const Tokens& r) {
  Alignment best;
  std::vector<long> map(c.size(), -1);
  std::vector<bool> used(r.size(), false);
  auto rec = [&](auto&& self, std::size_t i) -> void {
    if (i == c.size()) {
      std::size_t m = 0, ch = 0;
      for (std::size_t k = 0; k < c.size(); ++k) {
        if (map[k] < 0) continue;
        ++m;
        if (k == 0 || map[k - 1] < 0 || map[k - 1] + 1 != map[k]) ++ch;
      }
      if (m > best.matches || (m == best.matches && m > 0 && ch < best.chunks)) best = {m, ch};
      return;
    }
    self(self, i + 1);
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (used[j] || r[j] != c[i]) continue;
      used[j] = true;
      map[i] = static_cast<long>(j);
      self(self, i + 1);
      map[i] = -1;
      used[j] = false;
    }
  };
  rec(rec, 0);
  return best;
}

// Restates the greedy rule: repeatedly take the best remaining pair.
std::size_t brute_matches(const std::vector<Segment>& p, const std::vector<Segment>& g,
                          double thr) {
  std::vector<bool> pu(p.size(), false), gu(g.size(), false);
  std::size_t m = 0;
  while (true) {
    double best = -1;
    std::size_t bp = 0, bg = 0;
    for (std::size_t i = 0; i < p.size(); ++i)
      for (std::size_t j = 0; j < g.size(); ++j) {
        if (pu[i] || gu[j]) continue;
        const double v = tiou(p[i], g[j]);
        if (v >= thr && v > 0 && v > best) {
          best = v;
          bp = i;
          bg = j;
        }
      }
    if (best < 0) return m;
    pu[bp] = gu[bg] = true;
    ++m;
  }
}

}  // namespace

TEST(Tokenize, LowercaseAndPunctuation) {
  EXPECT_EQ(tokenize("The  Red-Blob, moves LEFT."),
            (Tokens{"the", "red", "blob", "moves", "left"}));
  EXPECT_TRUE(tokenize(" ... ").empty());
}

TEST(Bleu, Fixtures) {
  const Tokens s = t("the cat sat on the mat");
  for (int n = 1; n <= 4; ++n) EXPECT_NEAR(bleu_n(s, {s}, n), 1.0, kTol);
  // Clip 1 of 3; candidate longer than the reference so no penalty.
  EXPECT_NEAR(bleu_n(t("the the the"), {t("the cat")}, 1), 1.0 / 3, kTol);
  // Short candidate: exp(1 - 6/2).
  EXPECT_NEAR(bleu_n(t("the cat"), {s}, 1), std::exp(-2.0), kTol);
  EXPECT_NEAR(bleu_n(t("the cat"), {s}, 2), std::exp(-2.0), kTol);
  // p1 = 3/4, p2 = 1/3, p3 = 0.
  EXPECT_NEAR(bleu_n(t("a b c d"), {t("a b x d")}, 1), 0.75, kTol);
  EXPECT_NEAR(bleu_n(t("a b c d"), {t("a b x d")}, 2), 0.5, kTol);
  EXPECT_EQ(bleu_n(t("a b c d"), {t("a b x d")}, 3), 0.0);
  // Clipping takes the per-reference maximum count.
  EXPECT_NEAR(bleu_n(t("the the cat"), {t("the cat"), t("the the dog")}, 1), 1.0, kTol);
  EXPECT_NEAR(bleu_n(t("the the cat"), {t("the cat"), t("the the dog")}, 2), 1.0, kTol);
  // Equidistant references: the shorter length wins, so no penalty.
  EXPECT_NEAR(bleu_n(t("a b c"), {t("a b"), t("a b c d")}, 1), 1.0, kTol);
  EXPECT_NEAR(bleu_n(t("a b c"), {t("a b c d e")}, 1), std::exp(1 - 5.0 / 3), kTol);
  EXPECT_EQ(bleu_n(t("x y"), {t("a b")}, 1), 0.0);
  EXPECT_EQ(bleu_n({}, {t("a b")}, 1), 0.0);
  EXPECT_THROW(bleu_n(s, {s}, 5), ContractError);
}

TEST(RougeL, Fixtures) {
  const double b2 = 1.44;
  auto f = [&](double p, double r) { return (1 + b2) * p * r / (r + b2 * p); };
  EXPECT_NEAR(rouge_l(t("a b c d"), {t("a c d e")}), 0.75, kTol);
  EXPECT_NEAR(rouge_l(t("a b"), {t("a b c d")}), f(1, 0.5), kTol);
  EXPECT_NEAR(rouge_l(t("a b c"), {t("a x"), t("a b y c")}), f(1, 0.75), kTol);
  EXPECT_NEAR(rouge_l(t("c b a"), {t("a b c")}), 1.0 / 3, kTol);
  EXPECT_NEAR(rouge_l(t("a b c d e"), {t("e a c")}), f(2.0 / 5, 2.0 / 3), kTol);
  EXPECT_NEAR(rouge_l(t("same words here"), {t("same words here")}), 1.0, kTol);
  EXPECT_EQ(rouge_l(t("a b"), {t("c d")}), 0.0);
}

TEST(Meteor, Fixtures) {
  const Tokens ten = t("a b c d e f g h i j");
  EXPECT_NEAR(meteor_lite(ten, {ten}), 0.9995, kTol);
  EXPECT_EQ(meteor_lite(t("a b"), {t("c d")}), 0.0);
  EXPECT_NEAR(meteor_lite(t("b a"), {t("a b")}), 0.5, kTol);
  EXPECT_NEAR(meteor_lite(t("a b c"), {t("a b c d e")}), 0.625 * (1 - 1.0 / 54), kTol);
  EXPECT_NEAR(meteor_lite(t("the cat the"), {t("the the cat")}), 23.0 / 27, kTol);
  // Two references; the closer one wins.
  EXPECT_NEAR(meteor_lite(t("a b"), {t("b a"), t("a b")}), 1 - 0.5 / 8, kTol);
  const Tokens scrambled = t("j i h g f e d c b a");
  EXPECT_LT(meteor_lite(scrambled, {ten}), meteor_lite(ten, {ten}));
  EXPECT_NEAR(meteor_lite(scrambled, {ten}), 0.5, kTol);
}

TEST(Meteor, MatchesExhaustiveAlignment) {
  std::mt19937_64 rng(17);
  const Tokens vocab{"a", "b", "c"};
  for (int trial = 0; trial < 400; ++trial) {
    Tokens c, r;
    for (std::size_t i = 0, n = 1 + rng() % 7; i < n; ++i) c.push_back(vocab[rng() % 3]);
    for (std::size_t i = 0, n = 1 + rng() % 7; i < n; ++i) r.push_back(vocab[rng() % 3]);
    const Alignment fast = meteor_align(c, r), slow = brute_align(c, r);
    ASSERT_EQ(fast.matches, slow.matches);
    if (fast.matches) {
      ASSERT_EQ(fast.chunks, slow.chunks);
    }
  }
}

TEST(Cider, Fixtures) {
  // Identical to its reference: unit cosine for n = 1, 2 and nothing at 3, 4.
  auto s = cider({t("a b"), t("c d")}, {{t("a b")}, {t("c d")}});
  EXPECT_NEAR(s[0], 5.0, kTol);
  EXPECT_NEAR(s[1], 5.0, kTol);
  // n-grams present in every document carry zero weight.
  s = cider({t("a b"), t("a b")}, {{t("a b")}, {t("a b")}});
  EXPECT_NEAR(s[0], 0.0, kTol);
  // Half the unigram mass shared.
  s = cider({t("a c"), t("c d")}, {{t("a b")}, {t("c d")}});
  EXPECT_NEAR(s[0], 1.25, kTol);
  // Length penalty for one extra token.
  s = cider({t("a b e"), t("c d")}, {{t("a b")}, {t("c d")}});
  EXPECT_NEAR(s[0], 10 * (2 / std::sqrt(6.0) + 1 / std::sqrt(2.0)) / 4 * std::exp(-1.0 / 72),
              kTol);
  // Averaged over two references.
  s = cider({t("a b"), t("e f")}, {{t("a b"), t("c d")}, {t("e f")}});
  EXPECT_NEAR(s[0], 2.5, kTol);
  EXPECT_NEAR(s[1], 5.0, kTol);
  s = cider({t("x y"), t("c d")}, {{t("a b")}, {t("c d")}});
  EXPECT_EQ(s[0], 0.0);
  EXPECT_THROW(cider({t("a")}, {{t("a")}}), ContractError);
}

TEST(Cider, ReferenceOrderInvariant) {
  std::vector<std::vector<Tokens>> sets{{t("a red blob moves left"), t("the blob moves")},
                                        {t("a green bar moves up")},
                                        {t("then the same bar moves down"), t("a bar")}};
  auto swapped = sets;
  std::swap(swapped[0][0], swapped[0][1]);
  std::swap(swapped[2][0], swapped[2][1]);
  const std::vector<Tokens> cands{t("the red blob moves"), t("a bar moves up"), t("then a bar")};
  auto a = cider(cands, sets), b = cider(cands, swapped);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(Metrics, IdentityAndDisjoint) {
  const Tokens s = t("the red blob moves left quickly");
  EXPECT_NEAR(bleu_n(s, {s}, 4), 1.0, kTol);
  EXPECT_NEAR(rouge_l(s, {s}), 1.0, kTol);
  EXPECT_NEAR(meteor_lite(s, {s}), 1 - 0.5 / 216, kTol);
  auto c = cider({s, t("other words")}, {{s}, {t("other words")}});
  EXPECT_NEAR(c[0], 10.0 * (1 + 1 + 1 + 1) / 4, kTol);
  const Tokens d = t("green bar up");
  EXPECT_EQ(bleu_n(d, {s}, 1), 0.0);
  EXPECT_EQ(rouge_l(d, {s}), 0.0);
  EXPECT_EQ(meteor_lite(d, {s}), 0.0);
}

TEST(Recall, Basics) {
  GroundTruth gts;
  gts["v1"] = {20, {Segment::from_bounds(0, 5), Segment::from_bounds(10, 20)}, {"a", "b"}};
  gts["v2"] = {20, {Segment::from_bounds(2, 8)}, {"c"}};
  PredictionSet exact;
  exact["v1"] = {{Segment::from_bounds(0, 5), "", 0.9}, {Segment::from_bounds(10, 20), "", 0.8}};
  exact["v2"] = {{Segment::from_bounds(2, 8), "", 0.5}};
  auto c = recall_curve(exact, gts, 0.95, 3);
  EXPECT_NEAR(c[0].recall, 2.0 / 3, kTol);
  EXPECT_NEAR(c[1].recall, 1.0, kTol);
  EXPECT_NEAR(c[2].recall, 1.0, kTol);
  // Trapezoid: ((2/3 + 1)/2 + 1) / 2.
  EXPECT_NEAR(auc(c), (5.0 / 6 + 1) / 2, kTol);

  PredictionSet none;
  none["v1"] = {{Segment::from_bounds(6, 9), "", 1.0}};
  for (const auto& p : recall_curve(none, gts, 0.5, 4)) EXPECT_EQ(p.recall, 0.0);
  EXPECT_THROW(recall_curve(exact, GroundTruth{}, 0.5, 3), ContractError);
}

TEST(Recall, OneToOne) {
  GroundTruth gts;
  gts["v"] = {10, {Segment::from_bounds(0, 4), Segment::from_bounds(0, 5)}, {"a", "b"}};
  PredictionSet p;
  p["v"] = {{Segment::from_bounds(0, 4.5), "", 1.0}};
  EXPECT_NEAR(recall_curve(p, gts, 0.5, 1)[0].recall, 0.5, kTol);
}

TEST(Recall, MatchesBruteForce) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0, 30);
  for (int trial = 0; trial < 100; ++trial) {
    GroundTruth gts;
    PredictionSet preds;
    for (int v = 0; v < 5; ++v) {
      const std::string id = "v" + std::to_string(v);
      auto seg = [&] {
        double a = u(rng), b = u(rng);
        if (a > b) std::swap(a, b);
        return Segment::from_bounds(a, b + 0.5);
      };
      for (int g = 0; g < 1 + int(rng() % 3); ++g) {
        gts[id].segments.push_back(seg());
        gts[id].sentences.push_back("x");
      }
      for (int k = 0; k < 6; ++k) preds[id].push_back({seg(), "", u(rng)});
    }
    const double thr = 0.3 + 0.1 * (trial % 5);
    auto curve = recall_curve(preds, gts, thr, 6);
    std::size_t total = 0;
    for (const auto& [id, v] : gts) total += v.segments.size();
    for (std::size_t n = 1; n <= 6; ++n) {
      std::size_t m = 0;
      for (const auto& [id, v] : gts) {
        auto list = preds[id];
        std::stable_sort(list.begin(), list.end(),
                         [](const Prediction& a, const Prediction& b) { return a.score > b.score; });
        std::vector<Segment> top;
        for (std::size_t k = 0; k < n; ++k) top.push_back(list[k].segment);
        m += brute_matches(top, v.segments, thr);
      }
      ASSERT_NEAR(curve[n - 1].recall, double(m) / double(total), 1e-15);
    }
  }
}

TEST(Auc, Shapes) {
  std::vector<CurvePoint> ones{{1, 1}, {2, 1}, {3, 1}}, half{{1, .5}, {2, .5}, {3, .5}, {4, .5}};
  EXPECT_NEAR(auc(ones), 1.0, kTol);
  EXPECT_NEAR(auc(half), 0.5, kTol);
  std::vector<CurvePoint> piece{{1, 0}, {2, 0.5}, {3, 0.5}, {4, 1}};
  EXPECT_NEAR(auc(piece), (0.25 + 0.5 + 0.75) / 3, kTol);
  EXPECT_NEAR(auc({{1, 0.3}}), 0.3, kTol);
  EXPECT_THROW(auc({}), ContractError);
}

TEST(Auc, RankBasedInvariance) {
  GroundTruth gts;
  gts["v"] = {10, {Segment::from_bounds(0, 4), Segment::from_bounds(5, 9)}, {"a", "b"}};
  PredictionSet p, q;
  p["v"] = {{Segment::from_bounds(0, 4), "", 0.2},
            {Segment::from_bounds(5, 8), "", 0.9},
            {Segment::from_bounds(1, 2), "", 0.5}};
  q = p;
  for (auto& x : q["v"]) x.score = 3 * x.score + 1;
  auto a = evaluate_proposals(p, gts, 3), b = evaluate_proposals(q, gts, 3);
  EXPECT_EQ(a.avg_auc, b.avg_auc);
}

namespace {

GroundTruth two_video_gt() {
  GroundTruth gts;
  gts["v1"] = {20, {Segment::from_bounds(0, 10), Segment::from_bounds(10, 16)},
               {"the red blob moves left", "then the green bar moves up"}};
  gts["v2"] = {20, {Segment::from_bounds(4, 14)}, {"the blue checker moves down"}};
  return gts;
}

PredictionSet as_predictions(const GroundTruth& gts) {
  PredictionSet p;
  for (const auto& [id, v] : gts)
    for (std::size_t i = 0; i < v.segments.size(); ++i)
      p[id].push_back({v.segments[i], v.sentences[i], 1.0 - 0.1 * double(i)});
  return p;
}

}  // namespace

TEST(DenseEval, GroundTruthAsPredictions) {
  auto gts = two_video_gt();
  auto r = dense_caption_eval(as_predictions(gts), gts);
  ASSERT_EQ(r.at.size(), 4u);
  for (const auto& [alpha, s] : r.at) {
    EXPECT_NEAR(s.bleu[0], 1.0, kTol) << alpha;
    EXPECT_NEAR(s.bleu[3], 1.0, kTol) << alpha;
    EXPECT_NEAR(s.rouge_l, 1.0, kTol) << alpha;
  }
  // v1 holds two events and v2 one, so a single proposal per video recalls
  // 2 of 3; from n = 2 on everything is found.
  auto p = evaluate_proposals(as_predictions(gts), gts, 10);
  for (const auto& [thr, a] : p.auc_at) {
    const auto& curve = p.curves.at(thr);
    EXPECT_NEAR(curve[0].recall, 2.0 / 3.0, kTol) << thr;
    for (std::size_t n = 1; n < curve.size(); ++n) EXPECT_EQ(curve[n].recall, 1.0) << thr;
    EXPECT_NEAR(a, ((2.0 / 3.0 + 1.0) / 2 + 8.0) / 9.0, kTol) << thr;
  }
}

TEST(DenseEval, GroundTruthAsPredictionsSingleEvent) {
  GroundTruth gts;
  gts["a"] = {10, {Segment::from_bounds(1, 4)}, {"the red blob moves right"}};
  gts["b"] = {10, {Segment::from_bounds(2, 9)}, {"the blue bar moves left"}};
  auto p = evaluate_proposals(as_predictions(gts), gts, 10);
  for (const auto& [thr, a] : p.auc_at) EXPECT_EQ(a, 1.0) << thr;
  EXPECT_EQ(p.avg_auc, 1.0);
}

TEST(DenseEval, ShiftedSegmentsQuarter) {
  auto gts = two_video_gt();
  PredictionSet p;
  // tIoU exactly 0.4 with the first segment of each video.
  p["v1"] = {{Segment::from_bounds(0, 4), gts["v1"].sentences[0], 1.0}};
  p["v2"] = {{Segment::from_bounds(4, 8), gts["v2"].sentences[0], 1.0}};
  auto r = dense_caption_eval(p, gts);
  const auto& low = r.at.at(0.3);
  EXPECT_GT(low.bleu[0], 0.0);
  EXPECT_GT(low.meteor, 0.0);
  EXPECT_GT(low.cider, 0.0);
  for (double a : {0.5, 0.7, 0.9}) {
    EXPECT_EQ(r.at.at(a).bleu[0], 0.0);
    EXPECT_EQ(r.at.at(a).meteor, 0.0);
    EXPECT_EQ(r.at.at(a).cider, 0.0);
  }
  for (std::size_t n = 0; n < 4; ++n) EXPECT_NEAR(r.average.bleu[n], low.bleu[n] / 4, kTol);
  EXPECT_NEAR(r.average.meteor, low.meteor / 4, kTol);
  EXPECT_NEAR(r.average.rouge_l, low.rouge_l / 4, kTol);
  EXPECT_NEAR(r.average.cider, low.cider / 4, kTol);
}

TEST(DenseEval, ThreeVideoTransliteration) {
  GroundTruth gts = two_video_gt();
  gts["v3"] = {12, {Segment::from_bounds(1, 6), Segment::from_bounds(3, 11)},
               {"the yellow blob moves right", "then the same blob moves left"}};
  PredictionSet p;
  p["v1"] = {{Segment::from_bounds(0, 9), "the red blob moves right", 0.9},
             {Segment::from_bounds(9, 17), "then a green bar moves up", 0.8},
             {Segment::from_bounds(2, 3), "a bar", 0.1}};
  p["v2"] = {{Segment::from_bounds(3, 12), "the blue checker moves", 0.7}};
  p["v3"] = {{Segment::from_bounds(2, 10), "then the same blob moves left", 0.6},
             {Segment::from_bounds(0, 6), "the yellow blob", 0.4}};
  DenseEvalOptions opt;
  opt.top_k = 2;
  auto r = dense_caption_eval(p, gts, opt);

  // Hand transliteration: kept predictions and their references per alpha.
  struct Kept {
    std::string video;
    Segment seg;
    std::string sentence;
  };
  std::vector<Kept> kept{{"v1", Segment::from_bounds(0, 9), "the red blob moves right"},
                         {"v1", Segment::from_bounds(9, 17), "then a green bar moves up"},
                         {"v2", Segment::from_bounds(3, 12), "the blue checker moves"},
                         {"v3", Segment::from_bounds(2, 10), "then the same blob moves left"},
                         {"v3", Segment::from_bounds(0, 6), "the yellow blob"}};
  for (double alpha : opt.thresholds) {
    std::vector<std::vector<Tokens>> refs(kept.size()), docs;
    for (std::size_t i = 0; i < kept.size(); ++i) {
      const auto& g = gts[kept[i].video];
      for (std::size_t k = 0; k < g.segments.size(); ++k)
        if (tiou(kept[i].seg, g.segments[k]) >= alpha) refs[i].push_back(t(g.sentences[k]));
      if (!refs[i].empty()) docs.push_back(refs[i]);
    }
    double b1 = 0, me = 0, ro = 0, ci = 0;
    for (std::size_t i = 0; i < kept.size(); ++i) {
      if (refs[i].empty()) continue;
      b1 += bleu_n(t(kept[i].sentence), refs[i], 1);
      me += meteor_lite(t(kept[i].sentence), refs[i]);
      ro += rouge_l(t(kept[i].sentence), refs[i]);
      if (docs.size() >= 2) ci += CiderScorer(docs).score(t(kept[i].sentence), refs[i]);
    }
    const auto& s = r.at.at(alpha);
    EXPECT_NEAR(s.bleu[0], b1 / 5, kTol) << alpha;
    EXPECT_NEAR(s.meteor, me / 5, kTol) << alpha;
    EXPECT_NEAR(s.rouge_l, ro / 5, kTol) << alpha;
    EXPECT_NEAR(s.cider, ci / 5, kTol) << alpha;
  }
  EXPECT_EQ(r.predictions, 5u);
}

TEST(DenseEval, MonotoneInAlpha) {
  auto gts = two_video_gt();
  PredictionSet p;
  p["v1"] = {{Segment::from_bounds(1, 9), "the red blob moves left", 0.5},
             {Segment::from_bounds(8, 15), "then the green bar moves up", 0.4}};
  p["v2"] = {{Segment::from_bounds(5, 12), "the blue checker moves down", 0.3}};
  auto r = dense_caption_eval(p, gts);
  double prev = 2.0;
  for (const auto& [alpha, s] : r.at) {
    EXPECT_LE(s.bleu[0], prev);
    prev = s.bleu[0];
  }
}

TEST(DenseEval, Files) {
  const auto dir = std::filesystem::temp_directory_path() / "densecap_eval_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "gt.json") << R"({"v1": {"duration": 12.0, "timestamps": [[0, 4], [3, 9]],
      "sentences": ["The red blob moves left.", "then the same blob moves up"]}})";
    std::ofstream(dir / "pred.json") << R"({"results": {"v1": [
      {"sentence": "the red blob moves left", "timestamp": [0, 4], "proposal_score": 0.9}]}})";
    std::ofstream(dir / "broken.json") << "{\"results\": {\n  \"v1\": [\n  }";
    std::ofstream(dir / "badseg.json") << R"({"results": {"v1": [{"timestamp": [5, 1]}]}})";
  }
  auto gts = load_ground_truth(dir / "gt.json");
  auto preds = load_predictions(dir / "pred.json");
  ASSERT_EQ(gts.at("v1").segments.size(), 2u);
  EXPECT_EQ(preds.at("v1")[0].score, 0.9);
  auto r = dense_caption_eval(preds, gts);
  EXPECT_NEAR(r.at.at(0.9).bleu[0], 1.0, kTol);
  auto j = to_json(r);
  EXPECT_TRUE(j["per_tiou"].contains("0.3"));
  EXPECT_NE(to_csv(r).find("caption,average,ROUGE_L,"), std::string::npos);
  try {
    load_predictions(dir / "broken.json");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  try {
    load_predictions(dir / "badseg.json");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("results/v1[0]/timestamp"), std::string::npos);
  }
  std::filesystem::remove_all(dir);
}

TEST(DenseEval, PredictionsJsonRoundTrip) {
  PredictionSet p;
  p["a"] = {{Segment::from_bounds(0.5, 3.25), "the red blob moves right", 0.75},
            {Segment::from_bounds(1, 2), "", 0.1}};
  p["b"] = {};
  auto back = parse_predictions(to_json(p));
  ASSERT_EQ(back.size(), 2u);
  ASSERT_EQ(back["a"].size(), 2u);
  EXPECT_EQ(back["a"][0].segment.start(), 0.5);
  EXPECT_EQ(back["a"][0].segment.end(), 3.25);
  EXPECT_EQ(back["a"][0].sentence, "the red blob moves right");
  EXPECT_EQ(back["a"][1].score, 0.1);
  EXPECT_TRUE(back["b"].empty());
}
