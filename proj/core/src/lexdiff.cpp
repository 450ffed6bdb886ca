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

#include "cpt/lexdiff.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <unordered_map>

#include "cpt/errors.hpp"

namespace cpt::lexdiff {
namespace {

constexpr std::array<std::string_view, 4> kThreeCharOps = {"**=", "//=", ">>=",
                                                           "<<="};
// Includes "..." so that it is preferred over ".".
constexpr std::array<std::string_view, 20> kTwoCharOps = {
    "...", "->", ":=", "**", "//", "<<", ">>", "<=", ">=", "==",
    "!=",  "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "@="};
constexpr std::string_view kOneCharOps = "+-*/%@&|^~<>()[]{},:.;=!";

bool is_ident_start(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' ||
         c >= 0x80;
}

bool is_ident_char(unsigned char c) {
  return is_ident_start(c) || (c >= '0' && c <= '9');
}

bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

bool is_string_prefix(std::string_view s) {
  if (s.empty() || s.size() > 2) return false;
  for (char c : s) {
    char l = static_cast<char>(c | 0x20);
    if (l != 'r' && l != 'b' && l != 'u' && l != 'f') return false;
  }
  return true;
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  TokenSeq run() {
    while (pos_ < src_.size()) {
      if (at_line_start_ && depth_ == 0) {
        if (!handle_line_start()) continue;
      }
      step();
    }
    if (depth_ > 0) {
      throw LexError(open_brackets_.back(), "unclosed bracket");
    }
    while (indents_.size() > 1) {
      indents_.pop_back();
      push(std::string(kDedentText), TokenKind::kDedent, src_.size(),
           src_.size());
    }
    return std::move(out_);
  }

 private:
  // Measures indentation of a new logical line. Returns false when the line
  // is blank or comment-only (it has been consumed).
  bool handle_line_start() {
    std::size_t start = pos_;
    int col = 0;
    while (pos_ < src_.size() &&
           (src_[pos_] == ' ' || src_[pos_] == '\t' || src_[pos_] == '\f')) {
      col = src_[pos_] == '\t' ? (col / 8 + 1) * 8 : col + 1;
      ++pos_;
    }
    if (pos_ >= src_.size()) return false;
    char c = src_[pos_];
    if (c == '\n' || c == '\r' || c == '#') {
      while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      if (pos_ < src_.size()) {
        ++pos_;
        ++line_;
      }
      return false;
    }
    if (col > indents_.back()) {
      indents_.push_back(col);
      push(std::string(kIndentText), TokenKind::kIndent, start, pos_);
    } else {
      while (col < indents_.back()) {
        indents_.pop_back();
        push(std::string(kDedentText), TokenKind::kDedent, pos_, pos_);
      }
      if (col != indents_.back()) {
        throw LexError(pos_, "inconsistent dedent");
      }
    }
    at_line_start_ = false;
    return true;
  }

  void step() {
    char c = src_[pos_];
    if (c == ' ' || c == '\t' || c == '\f' || c == '\r') {
      ++pos_;
      return;
    }
    if (c == '#') {
      while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      return;
    }
    if (c == '\\' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '\n') {
      pos_ += 2;
      ++line_;
      return;
    }
    if (c == '\n') {
      if (depth_ == 0 && line_has_tokens_) {
        push(std::string(kNewlineText), TokenKind::kNewline, pos_, pos_ + 1);
        line_has_tokens_ = false;
      }
      if (depth_ == 0) at_line_start_ = true;
      ++pos_;
      ++line_;
      return;
    }
    auto uc = static_cast<unsigned char>(c);
    if (is_ident_start(uc)) {
      std::size_t start = pos_;
      while (pos_ < src_.size() &&
             is_ident_char(static_cast<unsigned char>(src_[pos_]))) {
        ++pos_;
      }
      if (pos_ < src_.size() && (src_[pos_] == '\'' || src_[pos_] == '"') &&
          is_string_prefix(src_.substr(start, pos_ - start))) {
        lex_string(start);
        return;
      }
      emit(start, TokenKind::kName);
      return;
    }
    if (is_digit(uc) ||
        (c == '.' && pos_ + 1 < src_.size() &&
         is_digit(static_cast<unsigned char>(src_[pos_ + 1])))) {
      lex_number();
      return;
    }
    if (c == '\'' || c == '"') {
      lex_string(pos_);
      return;
    }
    lex_operator();
  }

  void lex_number() {
    std::size_t start = pos_;
    bool hex = false;
    while (pos_ < src_.size()) {
      auto ch = static_cast<unsigned char>(src_[pos_]);
      if (is_ident_char(ch) || ch == '.') {
        if (ch == 'x' || ch == 'X') hex = true;
        ++pos_;
      } else if ((ch == '+' || ch == '-') && !hex && pos_ > start &&
                 (src_[pos_ - 1] == 'e' || src_[pos_ - 1] == 'E')) {
        ++pos_;
      } else {
        break;
      }
    }
    emit(start, TokenKind::kNumber);
  }

  void lex_string(std::size_t start) {
    char quote = src_[pos_];
    bool triple = pos_ + 2 < src_.size() && src_[pos_ + 1] == quote &&
                  src_[pos_ + 2] == quote;
    std::size_t quote_pos = pos_;
    pos_ += triple ? 3 : 1;
    while (true) {
      if (pos_ >= src_.size()) {
        throw LexError(quote_pos, "unterminated string literal");
      }
      char ch = src_[pos_];
      if (ch == '\\') {
        if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '\n') ++line_;
        pos_ += 2;
        continue;
      }
      if (ch == '\n') {
        if (!triple) throw LexError(quote_pos, "unterminated string literal");
        ++line_;
      }
      if (ch == quote) {
        if (!triple) {
          ++pos_;
          break;
        }
        if (pos_ + 2 < src_.size() && src_[pos_ + 1] == quote &&
            src_[pos_ + 2] == quote) {
          pos_ += 3;
          break;
        }
      }
      ++pos_;
    }
    emit(start, TokenKind::kString);
  }

  void lex_operator() {
    std::string_view rest = src_.substr(pos_);
    std::size_t len = 0;
    for (auto op : kThreeCharOps) {
      if (rest.starts_with(op)) len = 3;
    }
    if (len == 0) {
      for (auto op : kTwoCharOps) {
        if (rest.starts_with(op)) {
          len = op.size();
          break;
        }
      }
    }
    if (len == 0 && kOneCharOps.find(rest[0]) != std::string_view::npos) {
      len = 1;
    }
    if (len == 0) {
      throw LexError(pos_, std::string("unexpected character '") + rest[0] +
                               "'");
    }
    char c = rest[0];
    if (len == 1 && (c == '(' || c == '[' || c == '{')) {
      ++depth_;
      open_brackets_.push_back(pos_);
    } else if (len == 1 && (c == ')' || c == ']' || c == '}')) {
      if (depth_ == 0) throw LexError(pos_, "unmatched closing bracket");
      --depth_;
      open_brackets_.pop_back();
    }
    std::size_t start = pos_;
    pos_ += len;
    emit(start, TokenKind::kOperator);
  }

  void emit(std::size_t start, TokenKind kind) {
    push(std::string(src_.substr(start, pos_ - start)), kind, start, pos_);
    line_has_tokens_ = true;
  }

  void push(std::string text, TokenKind kind, std::size_t begin,
            std::size_t end) {
    out_.tokens.push_back(Token{std::move(text), kind, begin, end, line_});
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int depth_ = 0;
  bool at_line_start_ = true;
  bool line_has_tokens_ = false;
  std::vector<int> indents_{0};
  std::vector<std::size_t> open_brackets_;
  TokenSeq out_;
};

// Longest common run inside a[alo, ahi) x b[blo, bhi). Ties go to the
// smallest a index, then the smallest b index. prev and cur each hold at least
// bhi + 1 entries.
MatchBlock find_longest_match(std::span<const int> a, std::span<const int> b,
                              std::size_t alo, std::size_t ahi,
                              std::size_t blo, std::size_t bhi,
                              std::uint32_t* prev, std::uint32_t* cur) {
  if (ahi - alo == 1) {
    for (std::size_t j = blo; j < bhi; ++j)
      if (b[j] == a[alo]) return {alo, j, 1};
    return {alo, blo, 0};
  }
  if (bhi - blo == 1) {
    for (std::size_t i = alo; i < ahi; ++i)
      if (a[i] == b[blo]) return {i, blo, 1};
    return {alo, blo, 0};
  }
  std::uint32_t best_len = 0;
  std::size_t best_i = alo, best_j = blo;
  const auto cap = static_cast<std::uint32_t>(std::min(ahi - alo, bhi - blo));
  const int* bp = b.data();
  // Row alo has no predecessor, so prev never needs clearing.
  {
    const int a0 = a[alo];
    for (std::size_t j = blo; j < bhi; ++j) {
      std::uint32_t k = static_cast<std::uint32_t>(bp[j] == a0);
      prev[j + 1] = k;
      if (k > best_len) {
        best_len = 1;
        best_i = alo;
        best_j = j;
      }
    }
    prev[blo] = 0;
    if (best_len == cap) return {best_i, best_j, best_len};
  }
  for (std::size_t i = alo + 1; i < ahi; ++i) {
    const int ai = a[i];
    cur[blo] = 0;
    for (std::size_t j = blo; j < bhi; ++j) {
      std::uint32_t k =
          (prev[j] + 1) & (0u - static_cast<std::uint32_t>(bp[j] == ai));
      cur[j + 1] = k;
      if (k > best_len) {
        best_len = k;
        best_i = i + 1 - k;
        best_j = j + 1 - k;
      }
    }
    // Later runs can only tie a maximal one.
    if (best_len == cap) break;
    std::swap(prev, cur);
  }
  return {best_i, best_j, best_len};
}

// Emits the blocks of the window in increasing order of position.
template <typename Emit>
void emit_blocks(std::span<const int> a, std::span<const int> b,
                 std::size_t alo, std::size_t ahi, std::size_t blo,
                 std::size_t bhi, std::uint32_t* prev, std::uint32_t* cur,
                 Emit& emit) {
  if (alo >= ahi || blo >= bhi) return;
  MatchBlock m = find_longest_match(a, b, alo, ahi, blo, bhi, prev, cur);
  if (m.length == 0) return;
  emit_blocks(a, b, alo, m.a_start, blo, m.b_start, prev, cur, emit);
  emit(m);
  emit_blocks(a, b, m.a_start + m.length, ahi, m.b_start + m.length, bhi, prev,
              cur, emit);
}

template <typename Emit>
void for_each_block(std::span<const int> a, std::span<const int> b,
                    Emit&& emit) {
  if (a.empty() || b.empty()) return;
  constexpr std::size_t kInline = 64;
  std::uint32_t inline_rows[2 * kInline];
  std::vector<std::uint32_t> heap_rows;
  std::uint32_t* rows = inline_rows;
  if (b.size() + 1 > kInline) {
    heap_rows.resize(2 * (b.size() + 1));
    rows = heap_rows.data();
  }
  emit_blocks(a, b, 0, a.size(), 0, b.size(), rows, rows + b.size() + 1, emit);
}

}  // namespace

std::vector<std::string> TokenSeq::texts() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.text);
  return out;
}

TokenKind infer_kind(std::string_view text) {
  if (text == kNewlineText) return TokenKind::kNewline;
  if (text == kIndentText) return TokenKind::kIndent;
  if (text == kDedentText) return TokenKind::kDedent;
  if (text.empty()) return TokenKind::kOperator;
  auto c = static_cast<unsigned char>(text[0]);
  if (text.back() == '\'' || text.back() == '"') return TokenKind::kString;
  if (is_ident_start(c)) return TokenKind::kName;
  if (is_digit(c) || (c == '.' && text.size() > 1)) return TokenKind::kNumber;
  return TokenKind::kOperator;
}

TokenSeq TokenSeq::from_texts(std::span<const std::string> texts) {
  TokenSeq seq;
  seq.tokens.reserve(texts.size());
  int line = 1;
  for (const auto& t : texts) {
    TokenKind kind = infer_kind(t);
    seq.tokens.push_back(Token{t, kind, 0, 0, line});
    if (kind == TokenKind::kNewline) ++line;
  }
  return seq;
}

TokenSeq tokenize(std::string_view source) { return Lexer(source).run(); }

std::string detokenize(const TokenSeq& tokens) {
  std::string out;
  int level = 0;
  bool line_start = true;
  for (const auto& t : tokens.tokens) {
    switch (t.kind) {
      case TokenKind::kNewline:
        out += '\n';
        line_start = true;
        break;
      case TokenKind::kIndent:
        ++level;
        break;
      case TokenKind::kDedent:
        if (level > 0) --level;
        break;
      default:
        if (line_start) {
          out.append(static_cast<std::size_t>(4 * level), ' ');
          line_start = false;
        } else {
          out += ' ';
        }
        out += t.text;
    }
  }
  return out;
}

std::vector<MatchBlock> matching_blocks(std::span<const int> a,
                                        std::span<const int> b) {
  std::vector<MatchBlock> blocks;
  blocks.reserve(std::min(a.size(), b.size()));
  for_each_block(a, b, [&](const MatchBlock& m) { blocks.push_back(m); });
  return blocks;
}

namespace {

std::pair<std::vector<int>, std::vector<int>> intern(const TokenSeq& a,
                                                     const TokenSeq& b) {
  std::unordered_map<std::string_view, int> ids;
  auto map = [&](const TokenSeq& s) {
    std::vector<int> out;
    out.reserve(s.size());
    for (const auto& t : s.tokens) {
      auto [it, inserted] =
          ids.try_emplace(t.text, static_cast<int>(ids.size()));
      out.push_back(it->second);
    }
    return out;
  };
  auto ia = map(a);
  auto ib = map(b);
  return {std::move(ia), std::move(ib)};
}

}  // namespace

std::vector<MatchBlock> matching_blocks(const TokenSeq& a, const TokenSeq& b) {
  auto [ia, ib] = intern(a, b);
  return matching_blocks(std::span<const int>(ia), std::span<const int>(ib));
}

std::pair<MaskVector, MaskVector> masks_from_blocks(
    std::span<const MatchBlock> blocks, std::size_t a_len, std::size_t b_len) {
  MaskVector ma(a_len, 1);
  MaskVector mb(b_len, 1);
  for (const auto& blk : blocks) {
    std::fill_n(ma.begin() + static_cast<std::ptrdiff_t>(blk.a_start),
                blk.length, 0);
    std::fill_n(mb.begin() + static_cast<std::ptrdiff_t>(blk.b_start),
                blk.length, 0);
  }
  return {std::move(ma), std::move(mb)};
}

std::pair<MaskVector, MaskVector> build_masks(std::span<const int> a,
                                              std::span<const int> b) {
  MaskVector ma(a.size(), 1);
  MaskVector mb(b.size(), 1);
  for_each_block(a, b, [&](const MatchBlock& m) {
    std::fill_n(ma.begin() + static_cast<std::ptrdiff_t>(m.a_start), m.length, 0);
    std::fill_n(mb.begin() + static_cast<std::ptrdiff_t>(m.b_start), m.length, 0);
  });
  return {std::move(ma), std::move(mb)};
}

std::pair<MaskVector, MaskVector> build_masks(const TokenSeq& a,
                                              const TokenSeq& b) {
  auto [ia, ib] = intern(a, b);
  return build_masks(std::span<const int>(ia), std::span<const int>(ib));
}

double bag_cosine(std::span<const std::string> a,
                  std::span<const std::string> b) {
  if (a.empty() || b.empty()) {
    throw UndefinedSimilarityError(
        "cosine similarity of an empty token sequence is undefined");
  }
  std::unordered_map<std::string_view, std::pair<double, double>> counts;
  for (const auto& t : a) counts[t].first += 1.0;
  for (const auto& t : b) counts[t].second += 1.0;
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (const auto& [tok, c] : counts) {
    dot += c.first * c.second;
    na += c.first * c.first;
    nb += c.second * c.second;
  }
  // All partial sums are exact integers, so sqrt(na * nb) keeps ratios of
  // small integers exact.
  double cos = dot / std::sqrt(na * nb);
  return std::clamp(cos, 0.0, 1.0);
}

double bag_cosine(const TokenSeq& a, const TokenSeq& b) {
  auto ta = a.texts();
  auto tb = b.texts();
  return bag_cosine(std::span<const std::string>(ta),
                    std::span<const std::string>(tb));
}

}  // namespace cpt::lexdiff
