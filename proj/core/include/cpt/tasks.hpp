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

// Task manifests and test execution. A manifest is a JSON document
// {"tasks": [{"task_id", "instruction", "category", "tests": [{"command",
// "essential"}]}]}. Test commands run under /bin/sh with "{file}" replaced by
// the quoted path of the candidate source; exit status 0 within the time
// limit is a pass.

#ifndef CPT_TASKS_HPP
#define CPT_TASKS_HPP

#include <filesystem>
#include <string>
#include <vector>

namespace cpt::tasks {

struct TestCase {
  std::string command;
  bool essential = false;
};

struct TaskSpec {
  std::string task_id;
  std::string instruction;
  std::string category = "other";
  std::vector<TestCase> tests;

  // Indices of essential tests; the first test when none is flagged.
  std::vector<std::size_t> essential_indices() const;
};

std::vector<TaskSpec> load_manifest(const std::filesystem::path& path);
std::string serialize_manifest(const std::vector<TaskSpec>& tasks);
void save_manifest(const std::filesystem::path& path,
                   const std::vector<TaskSpec>& tasks);

struct TestOutcome {
  int essential_passed = 0;
  int passed = 0;
  int total = 0;
  bool passed_all() const { return total > 0 && passed == total; }
};

// Runs every test of `task` against `source_path`.
TestOutcome run_tests(const TaskSpec& task,
                      const std::filesystem::path& source_path,
                      double timeout_seconds);

// Writes `source` to a private temporary file, runs the tests, removes it.
TestOutcome run_tests_on_source(const TaskSpec& task, const std::string& source,
                                double timeout_seconds);

// Single-quotes a string for /bin/sh.
std::string shell_quote(const std::string& s);

// Whitespace-split instruction words.
std::vector<std::string> instruction_words(const std::string& instruction);

}  // namespace cpt::tasks

#endif  // CPT_TASKS_HPP
