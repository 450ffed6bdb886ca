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

// Run configuration: one JSON document with sections paths, model, pipeline,
// train, weights, generation, analyzer, pretrain, prefix, evaluate and synth,
// plus top-level seed and workers. Unknown keys are rejected. Any field can
// be overridden with "section.key=value".

#ifndef CPT_CLI_RUN_CONFIG_HPP
#define CPT_CLI_RUN_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cpt/losses.hpp"
#include "cpt/model.hpp"
#include "cpt/pairs.hpp"
#include "cpt/quality.hpp"
#include "cpt/trainer.hpp"
#include "json.hpp"

namespace cpt::cli {

namespace fs = std::filesystem;

struct Paths {
  fs::path out_dir = "cpt_out";
  fs::path manifest;          // task manifest (JSON)
  fs::path corpus;            // pretraining corpus (JSONL)
  fs::path base;              // default: out_dir/base.ckpt
  fs::path prefix;            // default: out_dir/prefix.ckpt
  fs::path dataset;           // default: out_dir/dataset.jsonl
  fs::path samples;           // default: out_dir/samples[_base]
  fs::path baseline_samples;  // second arm for evaluate
  fs::path candidates;        // stored candidates: <dir>/<task_id>/*.py
  fs::path reports;           // default: out_dir/reports
};

struct PretrainSettings {
  double learning_rate = 3e-3;
  int epochs = 8;
  double init_scale = 0.02;
  int max_vocab = 4096;
};

struct PrefixSettings {
  int length = model::kDefaultPrefixLength;
  int dim = 0;  // 0 selects the hidden size
  double init_scale = 0.02;
};

struct EvalSettings {
  std::vector<int> k{5, 10};
  int issue_cap = 10;
  bool csv = false;
};

struct SynthSettings {
  int tasks = 240;
  int heldout = 40;
  int variants = 4;
};

enum class AnalyzerKind { kMock, kExternal };

struct RunConfig {
  Paths paths;
  model::ModelConfig model;
  pairs::PipelineConfig pipeline;
  train::TrainConfig train;
  std::optional<double> basic_learning_rate;  // unset: same as stage 1
  std::optional<int> basic_epochs;
  bool skip_basic = false;
  train::LossWeights weights;
  model::GenerationConfig generation;
  AnalyzerKind analyzer_kind = AnalyzerKind::kMock;
  quality::AnalyzerConfig analyzer;
  PretrainSettings pretrain;
  PrefixSettings prefix;
  EvalSettings eval;
  SynthSettings synth;
  std::uint64_t seed = 0;
  int workers = 1;
  bool no_prefix = false;

  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::ordered_json to_json() const;

  // Throws ParameterError describing the first invalid field.
  void validate() const;

  fs::path base_path() const;
  fs::path prefix_path() const;
  fs::path dataset_path() const;
  fs::path samples_path() const;
  fs::path reports_path() const;
  fs::path train_state_path() const;
  fs::path train_log_path() const;

  // Stage-2 optimizer settings.
  train::TrainConfig basic_config() const;
  // Sub-stream seeds derived from the global seed.
  std::uint64_t stream_seed(std::uint64_t stream) const;
};

RunConfig load_run_config(const fs::path& path);

// "section.key=value" where value is parsed as JSON, falling back to a plain
// string. Throws ParameterError on unknown keys.
void apply_override(RunConfig& config, const std::string& assignment);

}  // namespace cpt::cli

#endif  // CPT_CLI_RUN_CONFIG_HPP
