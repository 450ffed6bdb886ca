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

#ifndef CPT_CLI_COMMANDS_HPP
#define CPT_CLI_COMMANDS_HPP

#include <iosfwd>
#include <string>

#include "json.hpp"

namespace cpt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumeric = 3;

// Entry point of the `cpt` tool. Verbs: synth, pretrain, analyze,
// build-dataset, train, generate, evaluate, report.
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

// Aligned text tables for an evaluation results document.
std::string render_evaluation_text(const nlohmann::ordered_json& results);

}  // namespace cpt::cli

#endif  // CPT_CLI_COMMANDS_HPP
