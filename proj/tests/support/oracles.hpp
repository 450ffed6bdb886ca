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

// Independent reference implementations used by the unit and acceptance
// tests. They favour obviousness over speed and share no code with core/.

#ifndef CPT_TESTS_ORACLES_HPP
#define CPT_TESTS_ORACLES_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace cpt::oracle {

// Exact fraction with a positive denominator.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Rational(std::int64_t n = 0, std::int64_t d = 1) : num(n), den(d) {
    if (den < 0) {
      num = -num;
      den = -den;
    }
    std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }
  friend Rational operator+(Rational a, Rational b) {
    return {a.num * b.den + b.num * a.den, a.den * b.den};
  }
  friend Rational operator-(Rational a, Rational b) {
    return {a.num * b.den - b.num * a.den, a.den * b.den};
  }
  friend Rational operator*(Rational a, Rational b) {
    return {a.num * b.num, a.den * b.den};
  }
  friend Rational operator/(Rational a, Rational b) {
    return {a.num * b.den, a.den * b.num};
  }
  friend bool operator<(Rational a, Rational b) {
    return a.num * b.den < b.num * a.den;
  }
  // Correctly rounded for |num|, den < 2^53.
  double to_double() const {
    return static_cast<double>(num) / static_cast<double>(den);
  }
};

// Quality score evaluated term by term in exact arithmetic.
inline double quality_score(bool fatal, int e, int r, int c, int w, int s) {
  if (fatal) return 0.0;
  Rational weighted = Rational(5) * Rational(e) + Rational(r) + Rational(c) +
                      Rational(w);
  Rational score = Rational(10) - (weighted / Rational(s)) * Rational(10);
  if (score < Rational(0)) score = Rational(0);
  return score.to_double();
}

struct Block {
  std::size_t a, b, len;
  friend bool operator==(const Block&, const Block&) = default;
};

// Longest common contiguous run by exhaustive search (first found wins, so
// ties go to the smallest a index, then the smallest b index), then recurse
// on the left and right flanks. Emits blocks in order.
inline void blocks_rec(const std::vector<int>& a, const std::vector<int>& b,
                       std::size_t alo, std::size_t ahi, std::size_t blo,
                       std::size_t bhi, std::vector<Block>& out) {
  std::size_t best = 0, bi = 0, bj = 0;
  for (std::size_t i = alo; i < ahi; ++i) {
    for (std::size_t j = blo; j < bhi; ++j) {
      std::size_t k = 0;
      while (i + k < ahi && j + k < bhi && a[i + k] == b[j + k]) ++k;
      if (k > best) {
        best = k;
        bi = i;
        bj = j;
      }
    }
  }
  if (best == 0) return;
  blocks_rec(a, b, alo, bi, blo, bj, out);
  out.push_back({bi, bj, best});
  blocks_rec(a, b, bi + best, ahi, bj + best, bhi, out);
}

// True when every recursion step of blocks_rec has a single longest run.
// Only then is the decomposition independent of the tie-break order.
inline bool unique_longest(const std::vector<int>& a, const std::vector<int>& b,
                           std::size_t alo, std::size_t ahi, std::size_t blo,
                           std::size_t bhi) {
  std::size_t best = 0, hits = 0, bi = 0, bj = 0;
  for (std::size_t i = alo; i < ahi; ++i) {
    for (std::size_t j = blo; j < bhi; ++j) {
      std::size_t k = 0;
      while (i + k < ahi && j + k < bhi && a[i + k] == b[j + k]) ++k;
      if (k > best) {
        best = k;
        hits = 1;
        bi = i;
        bj = j;
      } else if (k == best && k > 0) {
        ++hits;
      }
    }
  }
  if (best == 0) return true;
  if (hits > 1) return false;
  return unique_longest(a, b, alo, bi, blo, bj) &&
         unique_longest(a, b, bi + best, ahi, bj + best, bhi);
}

inline std::vector<Block> matching_blocks(const std::vector<int>& a,
                                          const std::vector<int>& b) {
  std::vector<Block> out;
  blocks_rec(a, b, 0, a.size(), 0, b.size(), out);
  return out;
}

inline std::pair<std::vector<std::uint8_t>, std::vector<std::uint8_t>> masks(
    const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<std::uint8_t> ma(a.size(), 1), mb(b.size(), 1);
  for (const auto& blk : matching_blocks(a, b)) {
    for (std::size_t k = 0; k < blk.len; ++k) {
      ma[blk.a + k] = 0;
      mb[blk.b + k] = 0;
    }
  }
  return {ma, mb};
}

// Cosine of count vectors via an explicit dot product over the union.
inline double cosine(const std::vector<std::string>& a,
                     const std::vector<std::string>& b) {
  std::map<std::string, double> ca, cb;
  for (const auto& t : a) ca[t] += 1.0;
  for (const auto& t : b) cb[t] += 1.0;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [k, v] : ca) {
    na += v * v;
    auto it = cb.find(k);
    if (it != cb.end()) dot += v * it->second;
  }
  for (const auto& [k, v] : cb) nb += v * v;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Fraction of size-k subsets of n samples (the first c correct) that contain
// at least one correct sample, by enumerating every subset.
inline double pass_at_k_enumerated(int n, int c, int k) {
  std::uint64_t hit = 0, total = 0;
  const std::uint32_t correct = (1u << c) - 1u;
  for (std::uint32_t m = 0; m < (1u << n); ++m) {
    if (__builtin_popcount(m) != k) continue;
    ++total;
    if (m & correct) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(total);
}

}  // namespace cpt::oracle

#endif  // CPT_TESTS_ORACLES_HPP
