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

#ifndef CPT_VOCAB_HPP
#define CPT_VOCAB_HPP

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cpt/lexdiff.hpp"

namespace cpt {

// Word-level model tokenizer over lexical tokens. Ids 0..3 are reserved for
// the special tokens below.
class Vocabulary {
 public:
  static constexpr int kUnk = 0;
  static constexpr int kBos = 1;
  static constexpr int kSep = 2;
  static constexpr int kEos = 3;

  Vocabulary();
  explicit Vocabulary(std::vector<std::string> tokens);

  // Frequency-ranked vocabulary (ties broken lexicographically), capped at
  // max_size entries including the specials.
  static Vocabulary build(std::span<const lexdiff::TokenSeq> corpus,
                          std::size_t max_size = 4096);

  int size() const { return static_cast<int>(tokens_.size()); }
  int id(std::string_view token) const;
  const std::string& token(int id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<int> encode(const lexdiff::TokenSeq& seq) const;
  std::vector<int> encode(std::span<const std::string> texts) const;
  // Special tokens are dropped.
  lexdiff::TokenSeq decode(std::span<const int> ids) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace cpt

#endif  // CPT_VOCAB_HPP
