/*
 * Copyright 2026 The clay Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace clay::features {

/// Lower-cased words of `text`, split on whitespace, '_', '.', '/', ':' and
/// camelCase boundaries ("HTTPServerView" -> http, server, view).
std::vector<std::string> split_words(std::string_view text);

/// 64-bit FNV-1a of the words joined by '\n', as 16 hex digits.
std::string corpus_hash(const std::vector<std::string>& words);

/// Byte-level BPE. Id 0 is padding, ids 1..256 are the raw bytes, merged
/// tokens follow in the order they were learned.
class TokenizerModel {
 public:
  static constexpr int kPadId = 0;
  static constexpr int kByteTokens = 256;
  static constexpr int kFirstMergedId = 1 + kByteTokens;

  TokenizerModel();

  std::vector<int> encode_word(std::string_view word) const;
  /// Token ids of the first `max_words` words of `text`.
  std::vector<int> encode(std::string_view text, int max_words) const;

  int vocab_size() const { return static_cast<int>(tokens_.size()); }
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::pair<int, int>>& merges() const { return merges_; }
  const std::string& corpus_hash() const { return corpus_hash_; }

  nlohmann::json to_json() const;
  static TokenizerModel from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static TokenizerModel load(const std::filesystem::path& path);

  bool operator==(const TokenizerModel&) const = default;

 private:
  friend TokenizerModel train_bpe(const std::vector<std::string>& words, int vocab_size);
  int add_merge(int a, int b);

  std::vector<std::string> tokens_;  // id -> bytes; tokens_[0] is "<pad>"
  std::map<std::string, int> ids_;   // bytes -> id, excluding padding
  std::vector<std::pair<int, int>> merges_;
  std::map<std::pair<int, int>, std::pair<int, int>> merge_rank_;  // pair -> (rank, merged id)
  std::string corpus_hash_;
};

/// Greedy BPE: repeatedly merges the most frequent adjacent pair, ties broken
/// by the lexicographically smallest (left, right) byte strings, until the
/// vocabulary holds `vocab_size` tokens or no pair is left.
TokenizerModel train_bpe(const std::vector<std::string>& words, int vocab_size);

}  // namespace clay::features
