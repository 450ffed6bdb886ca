// Copyright 2026 The cpt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cpt/vocab.hpp"

#include <algorithm>
#include <map>

#include "cpt/errors.hpp"

namespace cpt {
namespace {

const std::vector<std::string>& specials() {
  static const std::vector<std::string> kSpecials = {"<unk>", "<bos>", "<sep>",
                                                     "<eos>"};
  return kSpecials;
}

}  // namespace

Vocabulary::Vocabulary() : Vocabulary(specials()) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens)
    : tokens_(std::move(tokens)) {
  const auto& sp = specials();
  if (tokens_.size() < sp.size() ||
      !std::equal(sp.begin(), sp.end(), tokens_.begin())) {
    throw FormatError("vocabulary must start with <unk> <bos> <sep> <eos>");
  }
  for (int i = 0; i < static_cast<int>(tokens_.size()); ++i) {
    if (!index_.emplace(tokens_[i], i).second) {
      throw FormatError("duplicate vocabulary entry: " + tokens_[i]);
    }
  }
}

Vocabulary Vocabulary::build(std::span<const lexdiff::TokenSeq> corpus,
                             std::size_t max_size) {
  std::map<std::string, long> counts;
  for (const auto& seq : corpus) {
    for (const auto& t : seq.tokens) ++counts[t.text];
  }
  for (const auto& s : specials()) counts.erase(s);
  std::vector<std::pair<std::string, long>> ranked(counts.begin(),
                                                   counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) {
                     return a.second > b.second;
                   });
  std::vector<std::string> tokens = specials();
  for (const auto& [tok, n] : ranked) {
    if (tokens.size() >= max_size) break;
    tokens.push_back(tok);
  }
  return Vocabulary(std::move(tokens));
}

int Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || id >= size()) {
    throw ParameterError("token id out of range: " + std::to_string(id));
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::encode(const lexdiff::TokenSeq& seq) const {
  std::vector<int> ids;
  ids.reserve(seq.size());
  for (const auto& t : seq.tokens) ids.push_back(id(t.text));
  return ids;
}

std::vector<int> Vocabulary::encode(std::span<const std::string> texts) const {
  std::vector<int> ids;
  ids.reserve(texts.size());
  for (const auto& t : texts) ids.push_back(id(t));
  return ids;
}

lexdiff::TokenSeq Vocabulary::decode(std::span<const int> ids) const {
  std::vector<std::string> texts;
  texts.reserve(ids.size());
  for (int i : ids) {
    if (i >= 0 && i <= kEos) continue;
    texts.push_back(token(i));
  }
  return lexdiff::TokenSeq::from_texts(texts);
}

}  // namespace cpt
