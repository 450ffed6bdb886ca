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

// Pipeline steps shared by the command-line verbs and in-process drivers.

#ifndef CPT_CLI_PIPELINE_HPP
#define CPT_CLI_PIPELINE_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "cpt/eval.hpp"
#include "cpt/model.hpp"
#include "cpt/pairs.hpp"
#include "cpt/quality.hpp"
#include "cpt/synth.hpp"
#include "cpt/tasks.hpp"
#include "cpt/trainer.hpp"
#include "cpt/vocab.hpp"
#include "cpt_cli/run_config.hpp"

namespace cpt::cli {

// Seed sub-streams.
inline constexpr std::uint64_t kStreamPretrain = 1;
inline constexpr std::uint64_t kStreamCandidates = 2;
inline constexpr std::uint64_t kStreamPrefixInit = 3;
inline constexpr std::uint64_t kStreamTrain = 4;
inline constexpr std::uint64_t kStreamGenerate = 5;
inline constexpr std::uint64_t kStreamSynth = 6;

// Stable per-task seed (FNV-1a of the id mixed into `base`).
std::uint64_t task_seed(std::uint64_t base, const std::string& task_id);

// Runs fn(i) for i in [0, n) on up to `workers` threads.
void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t)>& fn);

quality::LintReport analyze_source(const RunConfig& config,
                                   const std::string& source);
quality::LintReport analyze_file(const RunConfig& config,
                                 const std::filesystem::path& path);

// Samples gen.n_samples programs and renders them back to source text.
std::vector<std::string> sample_sources(const model::BaseParams& base,
                                        const model::PrefixParams* prefix,
                                        const Vocabulary& vocab,
                                        const std::string& instruction,
                                        const model::GenerationConfig& gen);

// Analyzer score (and optionally the task tests) for every source.
eval::TaskResult score_samples(const RunConfig& config,
                               const tasks::TaskSpec& task,
                               const std::vector<std::string>& sources,
                               bool run_tests);

// Pretraining corpus file: JSONL of {task_id, instruction, source}.
void save_corpus(const std::filesystem::path& path,
                 const std::vector<synth::CorpusEntry>& corpus);
std::vector<synth::CorpusEntry> load_corpus(const std::filesystem::path& path);

Vocabulary build_vocabulary(const std::vector<synth::CorpusEntry>& corpus,
                            int max_size);
// [<bos>] instruction [<sep>] code [<eos>] per entry. Entries longer than
// max_context are truncated.
std::vector<std::vector<int>> encode_corpus(
    const std::vector<synth::CorpusEntry>& corpus, const Vocabulary& vocab,
    int max_context);

model::BaseParams pretrain_base(const RunConfig& config,
                                const std::vector<synth::CorpusEntry>& corpus,
                                const Vocabulary& vocab,
                                const std::function<void(int, double)>&
                                    on_epoch = {});

// Candidates from stored files when paths.candidates is set, otherwise
// sampled from the base model without a prefix.
pairs::DatasetResult build_dataset(const RunConfig& config,
                                   const std::vector<tasks::TaskSpec>& tasks,
                                   const model::BaseParams& base,
                                   const Vocabulary& vocab);

std::vector<train::TrainingExample> training_examples(
    const std::vector<pairs::DatasetInstance>& dataset,
    const Vocabulary& vocab);

}  // namespace cpt::cli

#endif  // CPT_CLI_PIPELINE_HPP
