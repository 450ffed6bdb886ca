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

// Synthetic task corpus for end-to-end runs. Every task is a small Python
// function built from optional idioms; each idiom has a clean form and a form
// the mock analyzer flags. Some idioms are pure insertions (the clean form is
// a token subsequence of the flagged one), the rest substitute tokens.

#ifndef CPT_SYNTH_HPP
#define CPT_SYNTH_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "cpt/tasks.hpp"

namespace cpt::synth {

enum class Epilogue {
  kPlain,        // return total
  kParenReturn,  // return (total)
  kElseReturn,   // if ...: return total / else: return bound
  kBoolReturn,   // if ...: return True / return False
};

struct Skeleton {
  std::string task_id;
  std::string fname;
  std::string seq_name;
  std::string bound_name;
  std::string op;   // loop accumulation operator
  std::string cmp;  // comparison in the epilogue
  int fallback = 0;
  bool empty_check = false;
  bool none_check = false;
  bool indexed_loop = false;
  bool extra_pass = false;
  Epilogue epilogue = Epilogue::kPlain;

  // Number of idioms with a flagged form.
  int idiom_count() const;
  // True when every idiom is an insertion.
  bool insertion_only() const;
};

// Per-idiom choice of the flagged form; idioms a skeleton lacks are ignored.
struct Style {
  bool empty_check = false;
  bool none_check = false;
  bool indexed_loop = false;
  bool extra_pass = false;
  bool epilogue = false;

  static Style clean() { return {}; }
  static Style flagged() { return {true, true, true, true, true}; }
};

std::string render(const Skeleton& s, const Style& style);
std::string instruction(const Skeleton& s);

// Essential test: the function definition is present. Further tests check
// for the parameters and a return statement.
tasks::TaskSpec task_spec(const Skeleton& s, const std::string& category);

// `count` distinct skeletons with at least two idioms each, deterministic in
// seed. Roughly two in five are insertion-only.
std::vector<Skeleton> make_skeletons(int count, std::uint64_t seed);

struct CorpusEntry {
  std::string task_id;
  std::string instruction;
  std::string source;
};

// Per task: the clean rendering, the flagged rendering, and
// variants_per_task - 2 renderings with independent per-idiom coin flips.
std::vector<CorpusEntry> pretraining_corpus(
    const std::vector<Skeleton>& skeletons, int variants_per_task,
    std::uint64_t seed);

}  // namespace cpt::synth

#endif  // CPT_SYNTH_HPP
