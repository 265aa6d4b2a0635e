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

#include <algorithm>
#include <set>

#include "densecap/errors.hpp"
#include "densecap/synth/synthdata.hpp"

namespace densecap::synth {

const std::vector<MotifSpec>& motif_library() {
  static const std::vector<MotifSpec> library{
      {Pattern::blob, {230, 40, 40}, 0.0, 0.5, "red", "blob", "right"},
      {Pattern::bar, {40, 40, 230}, 0.5, 0.0, "blue", "bar", "down"},
      {Pattern::checker, {40, 200, 40}, 0.0, -0.5, "green", "checker", "left"},
      {Pattern::blob, {230, 220, 40}, -0.5, 0.0, "yellow", "blob", "up"},
      {Pattern::blob, {40, 40, 230}, 0.0, -0.5, "blue", "blob", "left"},
      {Pattern::bar, {40, 200, 40}, 0.0, 0.5, "green", "bar", "right"},
      {Pattern::checker, {230, 220, 40}, 0.5, 0.0, "yellow", "checker", "down"},
      {Pattern::checker, {230, 40, 40}, -0.5, 0.0, "red", "checker", "up"},
  };
  return library;
}

std::vector<std::string> grammar_words() {
  std::set<std::string> words{"the", "then", "same", "moves"};
  for (const auto& m : motif_library()) words.insert({m.color, m.shape, m.direction});
  return {words.begin(), words.end()};
}

std::vector<std::string> oracle_caption(std::span<const int> motifs, std::size_t t) {
  if (t >= motifs.size()) throw ContractError("oracle_caption: event index out of range");
  const auto& lib = motif_library();
  for (std::size_t i = 0; i <= t; ++i) {
    if (motifs[i] < 0 || static_cast<std::size_t>(motifs[i]) >= lib.size()) {
      throw ContractError("oracle_caption: unknown motif id " + std::to_string(motifs[i]));
    }
  }
  const MotifSpec& m = lib[static_cast<std::size_t>(motifs[t])];
  std::vector<std::string> words;
  if (t > 0) words.push_back("then");
  words.push_back("the");
  if (t > 0 && motifs[t] == motifs[t - 1]) {
    words.push_back("same");
  } else {
    words.push_back(m.color);
  }
  words.push_back(m.shape);
  words.push_back("moves");
  words.push_back(m.direction);
  return words;
}

std::optional<ParsedCaption> parse_caption(const std::vector<std::string>& words) {
  std::set<std::string> colors, shapes, directions;
  for (const auto& m : motif_library()) {
    colors.insert(m.color);
    shapes.insert(m.shape);
    directions.insert(m.direction);
  }
  ParsedCaption p;
  std::size_t i = 0;
  auto next = [&]() -> const std::string* { return i < words.size() ? &words[i++] : nullptr; };
  const std::string* w = next();
  if (w && *w == "then") {
    p.then = true;
    w = next();
  }
  if (!w || *w != "the") return std::nullopt;
  w = next();
  if (!w) return std::nullopt;
  if (*w == "same") {
    // A repeat needs an earlier event.
    if (!p.then) return std::nullopt;
    p.same = true;
  } else if (colors.count(*w)) {
    p.color = *w;
  } else {
    return std::nullopt;
  }
  w = next();
  if (!w || !shapes.count(*w)) return std::nullopt;
  p.shape = *w;
  w = next();
  if (!w || *w != "moves") return std::nullopt;
  w = next();
  if (!w || !directions.count(*w)) return std::nullopt;
  p.direction = *w;
  if (i != words.size()) return std::nullopt;
  return p;
}

bool history_dependent(std::span<const int> motifs, std::size_t t) {
  const int alone[] = {motifs[t]};
  return oracle_caption(motifs, t) != oracle_caption(alone, 0);
}

}  // namespace densecap::synth
