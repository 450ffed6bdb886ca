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

#include "cpt/synth.hpp"

#include <array>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include "cpt/errors.hpp"
#include "cpt/random.hpp"
#include "cpt/trainer.hpp"

namespace cpt::synth {
namespace {

constexpr std::array<const char*, 12> kNames = {
    "total_up", "score_list", "measure", "combine",  "tally",  "accumulate",
    "weigh",    "rank_sum",   "fold",    "digest",   "reduce_all", "blend"};
constexpr std::array<const char*, 4> kSeqs = {"xs", "items", "values", "nums"};
constexpr std::array<const char*, 4> kBounds = {"y", "limit", "bound", "cap"};
constexpr std::array<const char*, 3> kOps = {"*", "+", "-"};
constexpr std::array<const char*, 3> kCmps = {">", "<", ">="};

struct Pattern {
  bool empty, none, indexed, pass;
  Epilogue epilogue;
};

// Cycled over tasks; entries 0, 2, 4 and 6 are insertion-only.
constexpr std::array<Pattern, 10> kPatterns = {{
    {false, false, false, true, Epilogue::kElseReturn},
    {true, false, true, false, Epilogue::kPlain},
    {false, false, false, true, Epilogue::kParenReturn},
    {false, true, true, false, Epilogue::kElseReturn},
    {false, false, false, true, Epilogue::kElseReturn},
    {true, false, false, false, Epilogue::kBoolReturn},
    {false, false, false, true, Epilogue::kParenReturn},
    {true, true, true, true, Epilogue::kParenReturn},
    {false, true, false, false, Epilogue::kBoolReturn},
    {false, false, true, false, Epilogue::kElseReturn},
}};

const char* epilogue_word(Epilogue e) {
  switch (e) {
    case Epilogue::kElseReturn:
      return "compare";
    case Epilogue::kBoolReturn:
      return "flag";
    case Epilogue::kPlain:
    case Epilogue::kParenReturn:
      break;
  }
  return "result";
}

}  // namespace

int Skeleton::idiom_count() const {
  return static_cast<int>(empty_check) + static_cast<int>(none_check) +
         static_cast<int>(indexed_loop) + static_cast<int>(extra_pass) +
         static_cast<int>(epilogue != Epilogue::kPlain);
}

bool Skeleton::insertion_only() const {
  return !empty_check && !none_check && !indexed_loop &&
         epilogue != Epilogue::kBoolReturn && idiom_count() > 0;
}

std::string render(const Skeleton& s, const Style& style) {
  std::ostringstream o;
  const std::string& xs = s.seq_name;
  const std::string& y = s.bound_name;
  o << "def " << s.fname << "(" << xs << ", " << y << "):\n";
  if (s.empty_check) {
    if (style.empty_check) {
      o << "    if len(" << xs << ") == 0:\n";
    } else {
      o << "    if not " << xs << ":\n";
    }
    o << "        return " << s.fallback << "\n";
  }
  if (s.none_check) {
    o << "    if " << y << (style.none_check ? " == None:\n" : " is None:\n");
    o << "        " << y << " = " << s.fallback << "\n";
  }
  o << "    total = 0\n";
  if (s.indexed_loop) {
    if (style.indexed_loop) {
      o << "    for i in range(len(" << xs << ")):\n";
      o << "        total = total " << s.op << " " << xs << "[i]\n";
    } else {
      o << "    for i, v in enumerate(" << xs << "):\n";
      o << "        total = total " << s.op << " v\n";
    }
  } else {
    o << "    for v in " << xs << ":\n";
    o << "        total = total " << s.op << " v\n";
  }
  if (s.extra_pass && style.extra_pass) o << "        pass\n";
  const bool low = style.epilogue;
  switch (s.epilogue) {
    case Epilogue::kPlain:
      o << "    return total\n";
      break;
    case Epilogue::kParenReturn:
      o << (low ? "    return (total)\n" : "    return total\n");
      break;
    case Epilogue::kElseReturn:
      o << "    if total " << s.cmp << " " << y << ":\n";
      o << "        return total\n";
      if (low) {
        o << "    else:\n";
        o << "        return " << y << "\n";
      } else {
        o << "    return " << y << "\n";
      }
      break;
    case Epilogue::kBoolReturn:
      if (low) {
        o << "    if total " << s.cmp << " " << y << ":\n";
        o << "        return True\n";
        o << "    return False\n";
      } else {
        o << "    return total " << s.cmp << " " << y << "\n";
      }
      break;
  }
  return o.str();
}

std::string instruction(const Skeleton& s) {
  std::ostringstream o;
  o << "write " << s.fname << " over " << s.seq_name << " with "
    << s.bound_name << " :";
  if (s.empty_check) o << " guard";
  if (s.none_check) o << " default";
  o << (s.indexed_loop ? " indexed" : " loop");
  o << " " << epilogue_word(s.epilogue) << " using " << s.op;
  if (s.epilogue == Epilogue::kElseReturn ||
      s.epilogue == Epilogue::kBoolReturn) {
    o << " " << s.cmp;
  }
  if (s.empty_check || s.none_check) o << " " << s.fallback;
  return o.str();
}

tasks::TaskSpec task_spec(const Skeleton& s, const std::string& category) {
  tasks::TaskSpec t;
  t.task_id = s.task_id;
  t.instruction = instruction(s);
  t.category = category;
  t.tests.push_back({"grep -Eq 'def +" + s.fname + " *[(]' {file}", true});
  t.tests.push_back({"grep -Eq '[(] *" + s.seq_name + " *, *" +
                         s.bound_name + " *[)]' {file}",
                     false});
  t.tests.push_back({"grep -q 'return' {file}", false});
  return t;
}

std::vector<Skeleton> make_skeletons(int count, std::uint64_t seed) {
  if (count < 0) throw ParameterError("skeleton count must be >= 0");
  // Every (name, sequence, bound) triple, in a seeded order, paired with the
  // cycled idiom pattern; op, comparison and fallback vary with the index.
  std::vector<std::tuple<int, int, int>> triples;
  for (int f = 0; f < static_cast<int>(kNames.size()); ++f) {
    for (int x = 0; x < static_cast<int>(kSeqs.size()); ++x) {
      for (int b = 0; b < static_cast<int>(kBounds.size()); ++b) {
        triples.emplace_back(f, x, b);
      }
    }
  }
  const auto max_count =
      static_cast<int>(triples.size() * kOps.size() * kPatterns.size());
  if (count > max_count) {
    throw ParameterError("at most " + std::to_string(max_count) +
                         " distinct skeletons are available");
  }
  std::vector<Skeleton> out;
  std::set<std::string> seen;
  for (int i = 0; static_cast<int>(out.size()) < count; ++i) {
    const auto round = static_cast<std::size_t>(i) / triples.size();
    auto order = train::shuffled_order(triples.size(), derive_seed(seed, round));
    auto [f, x, b] = triples[order[static_cast<std::size_t>(i) % triples.size()]];
    const Pattern& p = kPatterns[static_cast<std::size_t>(i) % kPatterns.size()];
    Skeleton s;
    s.fname = kNames[static_cast<std::size_t>(f)];
    s.seq_name = kSeqs[static_cast<std::size_t>(x)];
    s.bound_name = kBounds[static_cast<std::size_t>(b)];
    s.op = kOps[(static_cast<std::size_t>(i) / 7 + round) % kOps.size()];
    s.cmp = kCmps[(static_cast<std::size_t>(i) / 3) % kCmps.size()];
    s.fallback = static_cast<int>((static_cast<std::size_t>(i) / 5) % 2);
    s.empty_check = p.empty;
    s.none_check = p.none;
    s.indexed_loop = p.indexed;
    s.extra_pass = p.pass;
    s.epilogue = p.epilogue;
    if (!seen.insert(render(s, Style::clean()) + "|" +
                     render(s, Style::flagged()))
             .second) {
      continue;
    }
    std::ostringstream id;
    id << "syn" << std::setw(4) << std::setfill('0') << out.size();
    s.task_id = id.str();
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<CorpusEntry> pretraining_corpus(
    const std::vector<Skeleton>& skeletons, int variants_per_task,
    std::uint64_t seed) {
  if (variants_per_task < 2) {
    throw ParameterError("variants_per_task must be >= 2");
  }
  std::vector<CorpusEntry> out;
  std::mt19937_64 rng(derive_seed(seed, 0x5eed));
  for (const auto& s : skeletons) {
    const std::string instr = instruction(s);
    out.push_back({s.task_id, instr, render(s, Style::clean())});
    out.push_back({s.task_id, instr, render(s, Style::flagged())});
    for (int v = 2; v < variants_per_task; ++v) {
      Style st;
      st.empty_check = rng() & 1;
      st.none_check = rng() & 1;
      st.indexed_loop = rng() & 1;
      st.extra_pass = rng() & 1;
      st.epilogue = rng() & 1;
      out.push_back({s.task_id, instr, render(s, st)});
    }
  }
  return out;
}

}  // namespace cpt::synth
