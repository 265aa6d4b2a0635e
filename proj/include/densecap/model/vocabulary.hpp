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

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace densecap {

/// Token <-> id bijection with four reserved ids.
///
/// File format: one token per line, line i (0-based) holds id i + 4. Reserved
/// tokens are not written.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;
  static constexpr int kReserved = 4;

  Vocabulary();

  // Keeps tokens seen at least min_count times, ordered by descending count
  // then lexicographically.
  static Vocabulary build(const std::vector<std::vector<std::string>>& sentences,
                          std::size_t min_count);
  // tokens[i] receives id i + 4.
  static Vocabulary from_tokens(const std::vector<std::string>& tokens);
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
  std::string serialize() const;

  int id(std::string_view token) const;
  const std::string& token(int id) const;
  std::size_t size() const { return tokens_.size(); }
  bool contains(std::string_view token) const;

  std::vector<int> encode(const std::vector<std::string>& words) const;
  // Words before the first end token; PAD and BOS are skipped.
  std::vector<std::string> decode(const std::vector<int>& ids) const;

  // FNV-1a over the serialized token list.
  std::uint64_t fingerprint() const;
  // Non-reserved tokens in id order.
  std::vector<std::string> words() const;

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int, std::less<>> ids_;
};

/// Token ids of one caption padded to the maximum length K. A valid caption
/// holds at most K - 1 words followed by EOS and then PAD only.
struct Caption {
  std::vector<int> ids;

  static Caption from_words(const Vocabulary& vocab, const std::vector<std::string>& words,
                            std::size_t max_len);
  static Caption from_word_ids(const std::vector<int>& word_ids, std::size_t max_len);

  // Tokens up to and including EOS.
  std::size_t length() const;
  std::vector<int> word_ids() const;
  // Throws ContractError on a broken layout or out-of-range id.
  void validate(std::size_t vocab_size) const;
};

}  // namespace densecap
