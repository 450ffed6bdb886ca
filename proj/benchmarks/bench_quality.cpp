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

#include "cpt/quality.hpp"
#include "cpt/synth.hpp"

namespace {

using namespace cpt;

void BM_MockAnalyze(benchmark::State& state) {
  auto skeletons = synth::make_skeletons(16, 5);
  const auto rules = quality::default_mock_rules();
  std::vector<lexdiff::TokenSeq> sources;
  for (const auto& s : skeletons)
    sources.push_back(lexdiff::tokenize(synth::render(s, synth::Style::flagged())));
  for (auto _ : state) {
    for (const auto& toks : sources)
      benchmark::DoNotOptimize(quality::mock_analyze(toks, rules));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(sources.size()));
}
BENCHMARK(BM_MockAnalyze);

void BM_ParseAnalyzerReport(benchmark::State& state) {
  std::string raw;
  for (int i = 0; i < 200; ++i)
    raw += "f.py:" + std::to_string(i + 1) +
           ":0: W0612: unused-variable Unused variable 'x'\n";
  for (auto _ : state)
    benchmark::DoNotOptimize(quality::parse_analyzer_report(raw, 400, {}));
}
BENCHMARK(BM_ParseAnalyzerReport);

}  // namespace
