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

#include "densecap/model/vocabulary.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "densecap/errors.hpp"
#include "densecap/tensor/params.hpp"

namespace densecap {

Vocabulary::Vocabulary() : tokens_{"<pad>", "<bos>", "<eos>", "<unk>"} {
  for (int i = 0; i < kReserved; ++i) ids_[tokens_[i]] = i;
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& sentences,
                             std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  for (const auto& s : sentences)
    for (const auto& w : s) ++counts[w];
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [w, n] : counts) {
    if (n >= min_count) kept.emplace_back(w, n);
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens;
  for (const auto& [w, n] : kept) tokens.push_back(w);
  return from_tokens(tokens);
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
  Vocabulary v;
  for (const auto& t : tokens) {
    if (t.empty() || t.find_first_of(" \t\r\n") != std::string::npos) {
      throw DataError("vocabulary token '" + t + "' is empty or contains whitespace");
    }
    if (v.ids_.count(t)) throw DataError("vocabulary token '" + t + "' appears twice");
    v.ids_[t] = static_cast<int>(v.tokens_.size());
    v.tokens_.push_back(t);
  }
  return v;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary file " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) tokens.push_back(line);
  }
  return from_tokens(tokens);
}

std::string Vocabulary::serialize() const {
  std::ostringstream out;
  for (std::size_t i = kReserved; i < tokens_.size(); ++i) out << tokens_[i] << '\n';
  return out.str();
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write vocabulary file " + path.string());
  out << serialize();
}

int Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return ids_.find(token) != ids_.end(); }

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw ContractError("token id " + std::to_string(id) + " outside vocabulary");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& words) const {
  std::vector<int> out;
  out.reserve(words.size());
  for (const auto& w : words) out.push_back(id(w));
  return out;
}

std::vector<std::string> Vocabulary::decode(const std::vector<int>& ids) const {
  std::vector<std::string> out;
  for (int i : ids) {
    if (i == kEos) break;
    if (i == kPad || i == kBos) continue;
    out.push_back(token(i));
  }
  return out;
}

std::uint64_t Vocabulary::fingerprint() const { return ad::fnv1a(serialize()); }

std::vector<std::string> Vocabulary::words() const {
  return {tokens_.begin() + kReserved, tokens_.end()};
}

Caption Caption::from_words(const Vocabulary& vocab, const std::vector<std::string>& words,
                            std::size_t max_len) {
  return from_word_ids(vocab.encode(words), max_len);
}

Caption Caption::from_word_ids(const std::vector<int>& word_ids, std::size_t max_len) {
  if (max_len < 1) throw ContractError("caption length limit must be positive");
  Caption c;
  const std::size_t n = std::min(word_ids.size(), max_len - 1);
  c.ids.assign(word_ids.begin(), word_ids.begin() + static_cast<std::ptrdiff_t>(n));
  c.ids.push_back(Vocabulary::kEos);
  c.ids.resize(max_len, Vocabulary::kPad);
  return c;
}

std::size_t Caption::length() const {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == Vocabulary::kEos) return i + 1;
  }
  return ids.size();
}

std::vector<int> Caption::word_ids() const {
  std::vector<int> out;
  for (int i : ids) {
    if (i == Vocabulary::kEos || i == Vocabulary::kPad) break;
    out.push_back(i);
  }
  return out;
}

void Caption::validate(std::size_t vocab_size) const {
  bool ended = false;
  for (int i : ids) {
    if (i < 0 || static_cast<std::size_t>(i) >= vocab_size) {
      throw ContractError("caption token id " + std::to_string(i) + " outside vocabulary");
    }
    if (ended && i != Vocabulary::kPad) throw ContractError("caption has tokens after EOS");
    if (!ended && i == Vocabulary::kPad) throw ContractError("caption has PAD before EOS");
    if (i == Vocabulary::kBos) throw ContractError("caption contains BOS");
    if (i == Vocabulary::kEos) ended = true;
  }
  if (!ended) throw ContractError("caption has no EOS");
}

}  // namespace densecap
