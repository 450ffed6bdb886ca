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

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "cpt/lexdiff.hpp"

namespace {

using namespace cpt;

// b is a with roughly one token in eight replaced.
std::pair<std::vector<int>, std::vector<int>> edited_pair(int n) {
  std::mt19937_64 rng(11);
  std::vector<int> a(n), b;
  for (auto& t : a) t = static_cast<int>(rng() % 40);
  for (int t : a) {
    if (rng() % 8 == 0) b.push_back(static_cast<int>(40 + rng() % 5));
    b.push_back(t);
  }
  return {a, b};
}

void BM_MatchingBlocks(benchmark::State& state) {
  auto [a, b] = edited_pair(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(lexdiff::matching_blocks(a, b));
}
BENCHMARK(BM_MatchingBlocks)->Arg(8)->Arg(64)->Arg(512);

void BM_BuildMasks(benchmark::State& state) {
  auto [a, b] = edited_pair(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(lexdiff::build_masks(a, b));
}
BENCHMARK(BM_BuildMasks)->Arg(8)->Arg(64)->Arg(512);

void BM_Tokenize(benchmark::State& state) {
  std::string src;
  for (int i = 0; i < state.range(0); ++i)
    src += "def f" + std::to_string(i) +
           "(xs):\n    total = 0\n    for x in xs:\n        total += x\n"
           "    return total\n";
  for (auto _ : state) benchmark::DoNotOptimize(lexdiff::tokenize(src));
  state.SetBytesProcessed(state.iterations() * static_cast<long>(src.size()));
}
BENCHMARK(BM_Tokenize)->Arg(1)->Arg(50);

}  // namespace
