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
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace densecap::eval {

using Tokens = std::vector<std::string>;

// Lowercases, turns every ASCII punctuation character into a space and splits
// on whitespace.
Tokens tokenize(std::string_view sentence);

// Sentence-level BLEU-n: clipped n-gram precisions against all references,
// geometric mean over orders 1..n, brevity penalty exp(1 - r/c) when the
// candidate is shorter than the closest reference length (ties pick the
// shorter reference). No smoothing; an empty candidate scores 0.
double bleu_n(const Tokens& candidate, const std::vector<Tokens>& references, int n);

// LCS F-measure with recall weight beta, best over references.
double rouge_l(const Tokens& candidate, const std::vector<Tokens>& references, double beta = 1.2);

struct Alignment {
  std::size_t matches = 0;
  std::size_t chunks = 0;
};

// Exact-match unigram alignment with the most matches and, among those, the
// fewest chunks.
Alignment meteor_align(const Tokens& candidate, const Tokens& reference);

// Exact-match METEOR: F = 10PR / (R + 9P), penalty 0.5 (chunks/matches)^3,
// best over references. Synonym and stem modules are not part of it.
double meteor_lite(const Tokens& candidate, const std::vector<Tokens>& references);

/// CIDEr-D over a corpus of reference sets.
///
/// Document frequencies come from the reference sets handed to the
/// constructor (one document per set). Per order n = 1..4 the score is the
/// clipped tf-idf cosine times a Gaussian length penalty (sigma 6), averaged
/// over references; the orders are averaged and the result scaled by 10.
class CiderScorer {
 public:
  explicit CiderScorer(const std::vector<std::vector<Tokens>>& reference_sets,
                       double sigma = 6.0);

  double score(const Tokens& candidate, const std::vector<Tokens>& references) const;
  std::size_t documents() const { return documents_; }

 private:
  struct Vector {
    std::array<std::map<Tokens, double>, 4> weights;
    std::array<double, 4> norms{};
    std::size_t length = 0;
  };
  Vector vectorize(const Tokens& tokens) const;

  std::map<Tokens, double> doc_freq_;
  std::size_t documents_ = 0;
  double log_docs_ = 0.0;
  double sigma_;
};

// Scores candidates[i] against reference_sets[i] with document frequencies
// from all reference sets. Needs at least two sets.
std::vector<double> cider(const std::vector<Tokens>& candidates,
                          const std::vector<std::vector<Tokens>>& reference_sets);

struct SentenceScores {
  std::array<double, 4> bleu{};
  double meteor = 0.0;
  double rouge_l = 0.0;
  double cider = 0.0;
};

}  // namespace densecap::eval
