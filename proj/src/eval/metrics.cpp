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

#include "densecap/eval/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <set>

#include "densecap/errors.hpp"

namespace densecap::eval {

namespace {

std::map<Tokens, std::size_t> ngram_counts(const Tokens& t, std::size_t n) {
  std::map<Tokens, std::size_t> out;
  for (std::size_t i = 0; i + n <= t.size(); ++i) {
    ++out[Tokens(t.begin() + static_cast<std::ptrdiff_t>(i),
                 t.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return out;
}

std::size_t lcs(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

Tokens tokenize(std::string_view sentence) {
  Tokens out;
  std::string cur;
  for (char ch : sentence) {
    const auto u = static_cast<unsigned char>(ch);
    if (std::isspace(u) || std::ispunct(u)) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(u)));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

double bleu_n(const Tokens& candidate, const std::vector<Tokens>& references, int n) {
  if (n < 1 || n > 4) throw ContractError("bleu_n: order must be in 1..4");
  if (candidate.empty() || references.empty()) return 0.0;
  double log_sum = 0.0;
  for (int k = 1; k <= n; ++k) {
    const auto cand = ngram_counts(candidate, static_cast<std::size_t>(k));
    std::map<Tokens, std::size_t> max_ref;
    for (const auto& r : references) {
      for (const auto& [g, c] : ngram_counts(r, static_cast<std::size_t>(k))) {
        max_ref[g] = std::max(max_ref[g], c);
      }
    }
    std::size_t clipped = 0, total = 0;
    for (const auto& [g, c] : cand) {
      total += c;
      auto it = max_ref.find(g);
      if (it != max_ref.end()) clipped += std::min(c, it->second);
    }
    if (clipped == 0) return 0.0;
    log_sum += std::log(static_cast<double>(clipped) / static_cast<double>(total));
  }
  const double c = static_cast<double>(candidate.size());
  double r = static_cast<double>(references[0].size());
  for (const auto& ref : references) {
    const double len = static_cast<double>(ref.size());
    if (std::abs(len - c) < std::abs(r - c) || (std::abs(len - c) == std::abs(r - c) && len < r)) {
      r = len;
    }
  }
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return bp * std::exp(log_sum / n);
}

double rouge_l(const Tokens& candidate, const std::vector<Tokens>& references, double beta) {
  double best = 0.0;
  for (const auto& ref : references) {
    if (candidate.empty() || ref.empty()) continue;
    const double l = static_cast<double>(lcs(candidate, ref));
    if (l == 0.0) continue;
    const double p = l / static_cast<double>(candidate.size());
    const double r = l / static_cast<double>(ref.size());
    const double b2 = beta * beta;
    best = std::max(best, (1 + b2) * p * r / (r + b2 * p));
  }
  return best;
}

Alignment meteor_align(const Tokens& candidate, const Tokens& reference) {
  std::map<std::string, std::vector<std::size_t>> ref_pos;
  for (std::size_t j = 0; j < reference.size(); ++j) ref_pos[reference[j]].push_back(j);
  std::map<std::string, std::size_t> cand_count;
  for (const auto& w : candidate) ++cand_count[w];
  std::map<std::string, std::size_t> skips;
  std::size_t max_matches = 0;
  for (const auto& [w, c] : cand_count) {
    auto it = ref_pos.find(w);
    const std::size_t m = it == ref_pos.end() ? 0 : std::min(c, it->second.size());
    max_matches += m;
    skips[w] = c - m;
  }
  if (max_matches == 0) return {};

  // Branch and bound over candidate positions; chunks never decrease along a
  // path, so any partial count at or above the best is pruned.
  std::vector<bool> used(reference.size(), false);
  std::size_t best = std::numeric_limits<std::size_t>::max();
  auto search = [&](auto&& self, std::size_t i, long prev_ref, std::size_t chunks) -> void {
    if (chunks >= best) return;
    if (i == candidate.size()) {
      best = chunks;
      return;
    }
    const std::string& w = candidate[i];
    auto it = ref_pos.find(w);
    if (it != ref_pos.end()) {
      // Extending the current chunk first finds good bounds early.
      const long next = prev_ref + 1;
      if (prev_ref >= 0 && static_cast<std::size_t>(next) < reference.size() &&
          !used[static_cast<std::size_t>(next)] && reference[static_cast<std::size_t>(next)] == w) {
        used[static_cast<std::size_t>(next)] = true;
        self(self, i + 1, next, chunks);
        used[static_cast<std::size_t>(next)] = false;
      }
      for (std::size_t j : it->second) {
        if (used[j] || (prev_ref >= 0 && static_cast<long>(j) == next)) continue;
        used[j] = true;
        self(self, i + 1, static_cast<long>(j), chunks + 1);
        used[j] = false;
      }
    }
    auto& s = skips[w];
    if (s > 0) {
      --s;
      self(self, i + 1, -1, chunks);
      ++s;
    }
  };
  search(search, 0, -1, 0);
  return {max_matches, best};
}

double meteor_lite(const Tokens& candidate, const std::vector<Tokens>& references) {
  double best = 0.0;
  for (const auto& ref : references) {
    if (candidate.empty() || ref.empty()) continue;
    const Alignment a = meteor_align(candidate, ref);
    if (a.matches == 0) continue;
    const double m = static_cast<double>(a.matches);
    const double p = m / static_cast<double>(candidate.size());
    const double r = m / static_cast<double>(ref.size());
    const double f = 10 * p * r / (r + 9 * p);
    const double frag = static_cast<double>(a.chunks) / m;
    best = std::max(best, f * (1 - 0.5 * frag * frag * frag));
  }
  return best;
}

CiderScorer::CiderScorer(const std::vector<std::vector<Tokens>>& reference_sets, double sigma)
    : documents_(reference_sets.size()), sigma_(sigma) {
  if (documents_ < 2) {
    throw ContractError("cider: document frequencies need at least two reference sets, got " +
                        std::to_string(documents_));
  }
  for (const auto& refs : reference_sets) {
    std::set<Tokens> seen;
    for (const auto& r : refs)
      for (std::size_t n = 1; n <= 4; ++n)
        for (const auto& [g, c] : ngram_counts(r, n)) seen.insert(g);
    for (const auto& g : seen) doc_freq_[g] += 1.0;
  }
  log_docs_ = std::log(static_cast<double>(documents_));
}

CiderScorer::Vector CiderScorer::vectorize(const Tokens& tokens) const {
  Vector v;
  v.length = tokens.size();
  for (std::size_t n = 1; n <= 4; ++n) {
    for (const auto& [g, c] : ngram_counts(tokens, n)) {
      auto it = doc_freq_.find(g);
      const double df = std::log(std::max(1.0, it == doc_freq_.end() ? 0.0 : it->second));
      const double w = static_cast<double>(c) * (log_docs_ - df);
      v.weights[n - 1][g] = w;
      v.norms[n - 1] += w * w;
    }
    v.norms[n - 1] = std::sqrt(v.norms[n - 1]);
  }
  return v;
}

double CiderScorer::score(const Tokens& candidate, const std::vector<Tokens>& references) const {
  if (references.empty()) return 0.0;
  const Vector hyp = vectorize(candidate);
  double total = 0.0;
  for (const auto& ref_tokens : references) {
    const Vector ref = vectorize(ref_tokens);
    const double delta = static_cast<double>(hyp.length) - static_cast<double>(ref.length);
    double per_ref = 0.0;
    for (std::size_t n = 0; n < 4; ++n) {
      double val = 0.0;
      for (const auto& [g, w] : hyp.weights[n]) {
        auto it = ref.weights[n].find(g);
        if (it != ref.weights[n].end()) val += std::min(w, it->second) * it->second;
      }
      if (hyp.norms[n] != 0.0 && ref.norms[n] != 0.0) val /= hyp.norms[n] * ref.norms[n];
      per_ref += val * std::exp(-(delta * delta) / (2 * sigma_ * sigma_));
    }
    total += per_ref / 4.0;
  }
  return 10.0 * total / static_cast<double>(references.size());
}

std::vector<double> cider(const std::vector<Tokens>& candidates,
                          const std::vector<std::vector<Tokens>>& reference_sets) {
  if (candidates.size() != reference_sets.size()) {
    throw ContractError("cider: one reference set per candidate required");
  }
  CiderScorer scorer(reference_sets);
  std::vector<double> out;
  out.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    out.push_back(scorer.score(candidates[i], reference_sets[i]));
  }
  return out;
}

}  // namespace densecap::eval
