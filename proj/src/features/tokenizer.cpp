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

#include "clay/features/tokenizer.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "clay/error.hpp"

namespace clay::features {

namespace {

bool is_separator(char c) {
  return std::isspace(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '/' || c == ':';
}

bool upper(char c) { return std::isupper(static_cast<unsigned char>(c)) != 0; }
bool lower_or_digit(char c) {
  return std::islower(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c));
}

// Printable ASCII other than '%' is kept; everything else becomes %HH.
std::string escape(const std::string& bytes) {
  std::string out;
  for (unsigned char c : bytes) {
    if (c >= 0x20 && c < 0x7f && c != '%') {
      out += static_cast<char>(c);
    } else {
      char buf[4];
      std::snprintf(buf, sizeof buf, "%%%02X", c);
      out += buf;
    }
  }
  return out;
}

std::string unescape(const std::string& text) {
  std::string out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '%') {
      out += text[i];
      continue;
    }
    if (i + 2 >= text.size()) throw ParseError("tokenizer", "truncated escape in '" + text + "'");
    out += static_cast<char>(std::stoi(text.substr(i + 1, 2), nullptr, 16));
    i += 2;
  }
  return out;
}

}  // namespace

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) words.push_back(std::move(cur));
    cur.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (is_separator(c)) {
      flush();
      continue;
    }
    if (upper(c) && !cur.empty()) {
      const char prev = text[i - 1];
      const bool next_lower = i + 1 < text.size() && std::islower(static_cast<unsigned char>(text[i + 1]));
      // fooBar -> foo|Bar ; HTTPServer -> HTTP|Server
      if (lower_or_digit(prev) || (upper(prev) && next_lower)) flush();
    }
    cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  flush();
  return words;
}

std::string corpus_hash(const std::vector<std::string>& words) {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&](unsigned char c) {
    h ^= c;
    h *= 1099511628211ull;
  };
  for (const auto& w : words) {
    for (unsigned char c : w) mix(c);
    mix('\n');
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

TokenizerModel::TokenizerModel() {
  tokens_.push_back("<pad>");
  for (int b = 0; b < kByteTokens; ++b) {
    tokens_.push_back(std::string(1, static_cast<char>(b)));
    ids_[tokens_.back()] = b + 1;
  }
}

int TokenizerModel::add_merge(int a, int b) {
  const std::string merged = tokens_[static_cast<std::size_t>(a)] + tokens_[static_cast<std::size_t>(b)];
  int id;
  if (auto it = ids_.find(merged); it != ids_.end()) {
    id = it->second;
  } else {
    id = vocab_size();
    tokens_.push_back(merged);
    ids_[merged] = id;
  }
  merge_rank_[{a, b}] = {static_cast<int>(merges_.size()), id};
  merges_.push_back({a, b});
  return id;
}

std::vector<int> TokenizerModel::encode_word(std::string_view word) const {
  std::vector<int> seq;
  seq.reserve(word.size());
  for (unsigned char c : word) seq.push_back(int(c) + 1);
  while (seq.size() > 1) {
    int best_rank = -1, best_id = 0;
    std::pair<int, int> best_pair;
    for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
      auto it = merge_rank_.find({seq[i], seq[i + 1]});
      if (it != merge_rank_.end() && (best_rank < 0 || it->second.first < best_rank)) {
        best_rank = it->second.first;
        best_id = it->second.second;
        best_pair = it->first;
      }
    }
    if (best_rank < 0) break;
    std::vector<int> next;
    next.reserve(seq.size());
    for (std::size_t i = 0; i < seq.size(); ++i) {
      if (i + 1 < seq.size() && seq[i] == best_pair.first && seq[i + 1] == best_pair.second) {
        next.push_back(best_id);
        ++i;
      } else {
        next.push_back(seq[i]);
      }
    }
    seq.swap(next);
  }
  return seq;
}

std::vector<int> TokenizerModel::encode(std::string_view text, int max_words) const {
  std::vector<int> ids;
  const auto words = split_words(text);
  const std::size_t n = std::min(words.size(), static_cast<std::size_t>(std::max(max_words, 0)));
  for (std::size_t i = 0; i < n; ++i) {
    const auto w = encode_word(words[i]);
    ids.insert(ids.end(), w.begin(), w.end());
  }
  return ids;
}

TokenizerModel train_bpe(const std::vector<std::string>& words, int vocab_size) {
  if (vocab_size < TokenizerModel::kFirstMergedId)
    throw ContractViolation("train_bpe: vocab_size " + std::to_string(vocab_size) + " below the " +
                            std::to_string(TokenizerModel::kFirstMergedId) + " byte and special tokens");
  if (words.empty()) throw ContractViolation("train_bpe: empty corpus");
  TokenizerModel model;
  model.corpus_hash_ = corpus_hash(words);

  std::map<std::string, std::int64_t> freq;
  for (const auto& w : words)
    if (!w.empty()) ++freq[w];
  std::vector<std::vector<int>> seqs;
  std::vector<std::int64_t> counts;
  for (const auto& [w, c] : freq) {
    std::vector<int> s;
    for (unsigned char ch : w) s.push_back(int(ch) + 1);
    seqs.push_back(std::move(s));
    counts.push_back(c);
  }

  while (model.vocab_size() < vocab_size) {
    std::map<std::pair<int, int>, std::int64_t> pairs;
    for (std::size_t k = 0; k < seqs.size(); ++k)
      for (std::size_t i = 0; i + 1 < seqs[k].size(); ++i) pairs[{seqs[k][i], seqs[k][i + 1]}] += counts[k];
    if (pairs.empty()) break;
    const std::pair<int, int>* best = nullptr;
    std::int64_t best_count = 0;
    for (const auto& [p, c] : pairs) {
      if (best == nullptr || c > best_count ||
          (c == best_count && std::pair(model.token(p.first), model.token(p.second)) <
                                  std::pair(model.token(best->first), model.token(best->second)))) {
        best = &p;
        best_count = c;
      }
    }
    const auto [a, b] = *best;
    const int id = model.add_merge(a, b);
    for (auto& s : seqs) {
      std::vector<int> next;
      next.reserve(s.size());
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (i + 1 < s.size() && s[i] == a && s[i + 1] == b) {
          next.push_back(id);
          ++i;
        } else {
          next.push_back(s[i]);
        }
      }
      s.swap(next);
    }
  }
  return model;
}

nlohmann::json TokenizerModel::to_json() const {
  nlohmann::json j;
  j["format"] = "clay-bpe";
  j["version"] = 1;
  j["vocab_size"] = vocab_size();
  j["corpus_hash"] = corpus_hash_;
  j["special_tokens"] = {{"<pad>", kPadId}};
  j["vocab"] = nlohmann::json::object();
  for (std::size_t id = 1; id < tokens_.size(); ++id) j["vocab"][escape(tokens_[id])] = id;
  j["merges"] = nlohmann::json::array();
  for (const auto& [a, b] : merges_) j["merges"].push_back({escape(token(a)), escape(token(b))});
  return j;
}

TokenizerModel TokenizerModel::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "clay-bpe") throw ParseError("tokenizer", "not a clay-bpe tokenizer file");
  TokenizerModel m;
  m.corpus_hash_ = j.value("corpus_hash", "");
  for (const auto& pair : j.at("merges")) {
    const auto a = m.ids_.find(unescape(pair.at(0).get<std::string>()));
    const auto b = m.ids_.find(unescape(pair.at(1).get<std::string>()));
    if (a == m.ids_.end() || b == m.ids_.end()) throw ParseError("tokenizer/merges", "merge references unknown token");
    m.add_merge(a->second, b->second);
  }
  for (const auto& [tok, id] : j.at("vocab").items()) {
    const auto it = m.ids_.find(unescape(tok));
    if (it == m.ids_.end() || it->second != id.get<int>())
      throw ParseError("tokenizer/vocab", "vocab entry '" + tok + "' disagrees with the merge list");
  }
  if (m.vocab_size() != j.at("vocab_size").get<int>()) throw ParseError("tokenizer/vocab_size", "size mismatch");
  return m;
}

void TokenizerModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json().dump(1) << "\n";
}

TokenizerModel TokenizerModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string(), e.what());
  }
}

}  // namespace clay::features
