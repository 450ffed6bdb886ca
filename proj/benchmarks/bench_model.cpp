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

#include "cpt/model.hpp"

namespace {

using namespace cpt;

std::vector<int> random_ids(int n, int vocab, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<int> ids(n);
  for (auto& t : ids) t = static_cast<int>(rng() % vocab);
  return ids;
}

void BM_ForwardBase(benchmark::State& state) {
  model::ModelConfig cfg;
  auto base = model::BaseParams::init(cfg, 1);
  auto ids = random_ids(static_cast<int>(state.range(0)), cfg.vocab, 2);
  for (auto _ : state) benchmark::DoNotOptimize(model::forward_base(base, ids));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBase)->Arg(32)->Arg(128);

void BM_ForwardWithPrefix(benchmark::State& state) {
  model::ModelConfig cfg;
  auto base = model::BaseParams::init(cfg, 1);
  auto prefix =
      model::materialize_prefix(model::init_prefix(cfg, 8, 0, 3), cfg);
  auto ids = random_ids(static_cast<int>(state.range(0)), cfg.vocab, 2);
  for (auto _ : state)
    benchmark::DoNotOptimize(model::forward_with_prefix(base, prefix, ids));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardWithPrefix)->Arg(32)->Arg(128);

}  // namespace
