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

// Lexical tokenization of Python-like source, difflib-style matching blocks
// over token sequences, quality masks, and bag-of-tokens cosine similarity.

#ifndef CPT_LEXDIFF_HPP
#define CPT_LEXDIFF_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cpt::lexdiff {

enum class TokenKind : std::uint8_t {
  kName,
  kNumber,
  kString,
  kOperator,
  kNewline,
  kIndent,
  kDedent,
};

inline constexpr std::string_view kNewlineText = "<nl>";
inline constexpr std::string_view kIndentText = "<indent>";
inline constexpr std::string_view kDedentText = "<dedent>";

struct Token {
  std::string text;
  TokenKind kind = TokenKind::kName;
  // Byte span [begin, end) in the source. Dedent tokens have an empty span.
  std::size_t begin = 0;
  std::size_t end = 0;
  int line = 1;

  friend bool operator==(const Token& a, const Token& b) {
    return a.text == b.text;
  }
};

// Ordered tokens of one program. Equality compares token texts only.
struct TokenSeq {
  std::vector<Token> tokens;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  const Token& operator[](std::size_t i) const { return tokens[i]; }

  std::vector<std::string> texts() const;

  // Builds a sequence from bare token strings (no source spans). The kind of
  // each token is inferred from its text.
  static TokenSeq from_texts(std::span<const std::string> texts);

  friend bool operator==(const TokenSeq& a, const TokenSeq& b) {
    return a.tokens == b.tokens;
  }
};

TokenKind infer_kind(std::string_view text);

// Deterministic lexer. Comments and insignificant whitespace are dropped;
// a newline token is emitted at the end of every non-empty logical line that
// is terminated by '\n'; indentation changes produce indent/dedent tokens.
// Throws LexError on unterminated strings, unmatched brackets, inconsistent
// dedents or characters outside the lexical grammar.
TokenSeq tokenize(std::string_view source);

// Renders tokens back to source text: one space between tokens, four spaces
// per indentation level. tokenize(detokenize(t)) == t for lexer output.
std::string detokenize(const TokenSeq& tokens);

struct MatchBlock {
  std::size_t a_start = 0;
  std::size_t b_start = 0;
  std::size_t length = 0;

  friend bool operator==(const MatchBlock&, const MatchBlock&) = default;
};

// Recursive longest-contiguous-match decomposition. The longest run in the
// current window is chosen (ties: earliest in a, then earliest in b), then
// both flanks are processed the same way. No junk heuristic; the minimum
// match length is one. Result is sorted by a_start.
std::vector<MatchBlock> matching_blocks(std::span<const int> a,
                                        std::span<const int> b);
std::vector<MatchBlock> matching_blocks(const TokenSeq& a, const TokenSeq& b);

// 1 marks a token outside every matching block.
using MaskVector = std::vector<std::uint8_t>;

std::pair<MaskVector, MaskVector> masks_from_blocks(
    std::span<const MatchBlock> blocks, std::size_t a_len, std::size_t b_len);

std::pair<MaskVector, MaskVector> build_masks(std::span<const int> a,
                                              std::span<const int> b);
std::pair<MaskVector, MaskVector> build_masks(const TokenSeq& a,
                                              const TokenSeq& b);

// Cosine of token-count vectors. Throws UndefinedSimilarityError when either
// side is empty.
double bag_cosine(std::span<const std::string> a,
                  std::span<const std::string> b);
double bag_cosine(const TokenSeq& a, const TokenSeq& b);

}  // namespace cpt::lexdiff

#endif  // CPT_LEXDIFF_HPP
