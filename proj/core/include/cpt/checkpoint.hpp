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

// Checkpoint files: a "cpt-checkpoint" magic line, one JSON header line
// (format version, kind, model config, prefix shape, array directory), then
// the named arrays as little-endian float64 in row-major order, concatenated
// in directory order. Base and prefix live in separate files so a prefix can
// be plugged into any base with a matching configuration.

#ifndef CPT_CHECKPOINT_HPP
#define CPT_CHECKPOINT_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cpt/model.hpp"
#include "cpt/vocab.hpp"

namespace cpt::checkpoint {

inline constexpr int kFormatVersion = 1;

std::string serialize_base(const model::BaseParams& base,
                           const Vocabulary& vocab);
void save_base(const std::filesystem::path& path,
               const model::BaseParams& base, const Vocabulary& vocab);

struct LoadedBase {
  model::BaseParams params;
  Vocabulary vocab;
};
LoadedBase load_base(const std::filesystem::path& path);

std::string serialize_prefix(const model::PrefixParams& prefix,
                             const model::ModelConfig& config, int d_prime);
void save_prefix(const std::filesystem::path& path,
                 const model::PrefixParams& prefix,
                 const model::ModelConfig& config, int d_prime);

struct LoadedPrefix {
  model::PrefixParams prefix;
  model::ModelConfig config;
  int d_prime = 0;
};
LoadedPrefix load_prefix(const std::filesystem::path& path);

// Resumable optimizer state for prefix training.
struct TrainState {
  model::ReparamState state;
  std::vector<model::Matrix> adam_m;
  std::vector<model::Matrix> adam_v;
  std::int64_t adam_step = 0;
  int stage = 1;  // 1 comparative, 2 basic
  int epochs_done = 0;
};
void save_train_state(const std::filesystem::path& path,
                      const TrainState& state,
                      const model::ModelConfig& config);
TrainState load_train_state(const std::filesystem::path& path,
                            const model::ModelConfig& config);

// Writes bytes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace cpt::checkpoint

#endif  // CPT_CHECKPOINT_HPP
