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

#include <random>

#include "cpt/errors.hpp"
#include "cpt/lexdiff.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace cpt;
using namespace cpt::lexdiff;

namespace {

using Strs = std::vector<std::string>;

TokenSeq seq(const Strs& texts) { return TokenSeq::from_texts(texts); }

std::vector<int> random_ints(std::mt19937_64& rng, int max_len, int alphabet) {
  std::vector<int> v(rng() % (max_len + 1));
  for (auto& x : v) x = static_cast<int>(rng() % alphabet);
  return v;
}

}  // namespace

TEST_CASE("tokenize examples") {
  CHECK(tokenize("x = 1").texts() == Strs{"x", "=", "1"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("if a<=b:").texts() == Strs{"if", "a", "<=", "b", ":"});
  CHECK(tokenize("x = 1").texts() == tokenize("x = 1").texts());
}

TEST_CASE("tokenize layout and literals") {
  auto t = tokenize("def f(x):\n    return 'a b'\n");
  CHECK(t.texts() == Strs{"def", "f", "(", "x", ")", ":", "<nl>", "<indent>",
                          "return", "'a b'", "<nl>", "<dedent>"});
  CHECK(t[9].kind == TokenKind::kString);
  CHECK(t[3].kind == TokenKind::kName);
  try {
    tokenize("x = 'abc");
    FAIL("expected a lex error");
  } catch (const LexError& e) {
    CHECK(e.offset() == 4);
  }
}

TEST_CASE("detokenize round trips through tokenize") {
  for (const char* src :
       {"def f(xs, y):\n    total = 0\n    for x in xs:\n        total = total + x\n"
        "    if total > y:\n        return total\n    return y\n",
        "x = [1, 2]\n", "if a <= b and not c:\n    pass\n"}) {
    auto t = tokenize(src);
    CHECK(tokenize(detokenize(t)).texts() == t.texts());
  }
}

TEST_CASE("matching blocks examples") {
  auto a = seq({"a", "b", "c", "d"});
  CHECK(matching_blocks(a, a) == std::vector<MatchBlock>{{0, 0, 4}});
  CHECK(matching_blocks(a, seq({"x", "y"})).empty());
  CHECK(matching_blocks(a, seq({"b", "c", "d", "e"})) ==
        std::vector<MatchBlock>{{1, 0, 3}});
}

TEST_CASE("masks examples") {
  auto a = seq({"a", "b", "c", "d"});
  auto [ia, ib] = build_masks(a, a);
  CHECK(ia == MaskVector{0, 0, 0, 0});
  CHECK(ib == MaskVector{0, 0, 0, 0});
  auto [da, db] = build_masks(a, seq({"x", "y"}));
  CHECK(da == MaskVector{1, 1, 1, 1});
  CHECK(db == MaskVector{1, 1});
  auto [ma, mb] = build_masks(a, seq({"b", "c", "d", "e"}));
  CHECK(ma == MaskVector{1, 0, 0, 0});
  CHECK(mb == MaskVector{0, 0, 0, 1});
}

TEST_CASE("matching block properties on random sequences") {
  std::mt19937_64 rng(3);
  int unambiguous = 0;
  for (int it = 0; it < 2000; ++it) {
    auto a = random_ints(rng, 14, 4);
    auto b = random_ints(rng, 14, 4);
    auto ab = matching_blocks(a, b);
    auto ba = matching_blocks(b, a);

    std::size_t total = 0;
    for (const auto& blk : ab) total += blk.length;
    CHECK(total <= std::min(a.size(), b.size()));

    // Swapping the inputs mirrors the blocks whenever no length ties make
    // the earliest-position rule pick a different run.
    if (oracle::unique_longest(a, b, 0, a.size(), 0, b.size())) {
      ++unambiguous;
      REQUIRE(ba.size() == ab.size());
      for (std::size_t i = 0; i < ab.size(); ++i) {
        CHECK(ba[i].a_start == ab[i].b_start);
        CHECK(ba[i].b_start == ab[i].a_start);
        CHECK(ba[i].length == ab[i].length);
      }
    }

    auto [ma, mb] = build_masks(a, b);
    CHECK(std::count(ma.begin(), ma.end(), 0) == static_cast<long>(total));
    CHECK(std::count(mb.begin(), mb.end(), 0) == static_cast<long>(total));

    auto self = matching_blocks(a, a);
    if (!a.empty()) {
      CHECK(self == std::vector<MatchBlock>{{0, 0, a.size()}});
    }
  }
  CHECK(unambiguous > 200);
}

TEST_CASE("matching blocks agree with brute force on longer random input") {
  std::mt19937_64 rng(5);
  for (int it = 0; it < 500; ++it) {
    auto a = random_ints(rng, 30, 3);
    auto b = random_ints(rng, 30, 3);
    auto got = matching_blocks(a, b);
    auto want = oracle::matching_blocks(a, b);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].a_start == want[i].a);
      CHECK(got[i].b_start == want[i].b);
      CHECK(got[i].length == want[i].len);
    }
  }
}

TEST_CASE("bag cosine examples") {
  auto a = seq({"x", "y", "x"});
  CHECK(bag_cosine(a, a) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(bag_cosine(a, seq({"p", "q"})) == 0.0);
  CHECK(bag_cosine(seq({"a", "a", "b"}), seq({"a", "b", "b"})) == 0.8);
  CHECK_THROWS_AS(bag_cosine(TokenSeq{}, a), UndefinedSimilarityError);
  CHECK_THROWS_AS(bag_cosine(a, TokenSeq{}), UndefinedSimilarityError);
}

TEST_CASE("bag cosine properties") {
  std::mt19937_64 rng(9);
  const Strs alphabet{"a", "b", "c", "d", "e", "f"};
  for (int it = 0; it < 500; ++it) {
    Strs a(1 + rng() % 10), b(1 + rng() % 10);
    for (auto& t : a) t = alphabet[rng() % alphabet.size()];
    for (auto& t : b) t = alphabet[rng() % alphabet.size()];
    double ab = bag_cosine(a, b);
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    CHECK(ab == bag_cosine(b, a));
    CHECK(std::abs(ab - oracle::cosine(a, b)) <= 1e-12);

    Strs shuffled = a;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(std::abs(bag_cosine(shuffled, b) - ab) <= 1e-12);

    Strs a3, b3;
    for (int k = 0; k < 3; ++k) {
      a3.insert(a3.end(), a.begin(), a.end());
      b3.insert(b3.end(), b.begin(), b.end());
    }
    CHECK(std::abs(bag_cosine(a3, b3) - ab) <= 1e-12);
  }
}
