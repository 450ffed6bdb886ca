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

#include "cpt/eval.hpp"

namespace {

void BM_PassAtK(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) {
    double sum = 0.0;
    for (int c = 0; c <= n; ++c) sum += cpt::eval::pass_at_k(n, c, 10);
    benchmark::DoNotOptimize(sum);
  }
}
BENCHMARK(BM_PassAtK)->Arg(20)->Arg(200);

}  // namespace
