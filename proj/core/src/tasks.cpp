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

#include "cpt/tasks.hpp"

#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cpt/checkpoint.hpp"
#include "cpt/errors.hpp"
#include "cpt/process.hpp"
#include "json.hpp"

namespace cpt::tasks {

using nlohmann::ordered_json;

std::vector<std::size_t> TaskSpec::essential_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < tests.size(); ++i) {
    if (tests[i].essential) out.push_back(i);
  }
  if (out.empty() && !tests.empty()) out.push_back(0);
  return out;
}

std::vector<TaskSpec> load_manifest(const std::filesystem::path& path) {
  std::string text;
  try {
    text = checkpoint::read_file(path);
  } catch (const Error&) {
    throw FormatError("cannot read task manifest " + path.string());
  }
  std::vector<TaskSpec> out;
  try {
    auto doc = nlohmann::json::parse(text);
    for (const auto& t : doc.at("tasks")) {
      TaskSpec spec;
      spec.task_id = t.at("task_id").get<std::string>();
      spec.instruction = t.value("instruction", std::string{});
      spec.category = t.value("category", std::string{"other"});
      if (t.contains("tests")) {
        for (const auto& tc : t.at("tests")) {
          spec.tests.push_back({tc.at("command").get<std::string>(),
                                tc.value("essential", false)});
        }
      }
      out.push_back(std::move(spec));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed task manifest " + path.string() + ": " +
                      e.what());
  }
  return out;
}

std::string serialize_manifest(const std::vector<TaskSpec>& tasks) {
  ordered_json arr = ordered_json::array();
  for (const auto& t : tasks) {
    ordered_json tests = ordered_json::array();
    for (const auto& tc : t.tests) {
      tests.push_back({{"command", tc.command}, {"essential", tc.essential}});
    }
    arr.push_back({{"task_id", t.task_id},
                   {"instruction", t.instruction},
                   {"category", t.category},
                   {"tests", tests}});
  }
  ordered_json doc;
  doc["tasks"] = arr;
  return doc.dump(1) + "\n";
}

void save_manifest(const std::filesystem::path& path,
                   const std::vector<TaskSpec>& tasks) {
  checkpoint::write_file_atomic(path, serialize_manifest(tasks));
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  out += "'";
  return out;
}

TestOutcome run_tests(const TaskSpec& task,
                      const std::filesystem::path& source_path,
                      double timeout_seconds) {
  TestOutcome outcome;
  auto essential = task.essential_indices();
  const std::string quoted = shell_quote(source_path.string());
  for (std::size_t i = 0; i < task.tests.size(); ++i) {
    std::string cmd = task.tests[i].command;
    for (auto pos = cmd.find("{file}"); pos != std::string::npos;
         pos = cmd.find("{file}", pos + quoted.size())) {
      cmd.replace(pos, 6, quoted);
    }
    ProcessResult r = run_process({"/bin/sh", "-c", cmd}, timeout_seconds);
    bool ok = r.started && !r.timed_out && !r.signaled && r.exit_code == 0;
    ++outcome.total;
    if (ok) {
      ++outcome.passed;
      for (auto e : essential) {
        if (e == i) ++outcome.essential_passed;
      }
    }
  }
  return outcome;
}

TestOutcome run_tests_on_source(const TaskSpec& task, const std::string& source,
                                double timeout_seconds) {
  if (task.tests.empty()) return {};
  auto dir = std::filesystem::temp_directory_path();
  std::string tmpl = (dir / "cpt-cand-XXXXXX.py").string();
  std::vector<char> buf(tmpl.begin(), tmpl.end());
  buf.push_back('\0');
  int fd = ::mkstemps(buf.data(), 3);
  if (fd < 0) throw Error("cannot create temporary file in " + dir.string());
  ::close(fd);
  std::filesystem::path path(buf.data());
  {
    std::ofstream out(path, std::ios::binary);
    out << source;
  }
  TestOutcome outcome;
  try {
    outcome = run_tests(task, path, timeout_seconds);
  } catch (...) {
    std::filesystem::remove(path);
    throw;
  }
  std::filesystem::remove(path);
  return outcome;
}

std::vector<std::string> instruction_words(const std::string& instruction) {
  std::vector<std::string> out;
  std::istringstream in(instruction);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

}  // namespace cpt::tasks
