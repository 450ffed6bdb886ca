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

#ifndef CPT_PROCESS_HPP
#define CPT_PROCESS_HPP

#include <string>
#include <vector>

namespace cpt {

struct ProcessResult {
  bool started = false;    // false when exec failed (e.g. not found)
  bool timed_out = false;
  bool signaled = false;
  int exit_code = -1;
  std::string output;  // captured stdout
};

// Spawns argv[0] (searched on PATH) with stdin closed and stderr discarded,
// captures stdout and kills the child after `timeout_seconds`.
ProcessResult run_process(const std::vector<std::string>& argv,
                          double timeout_seconds);

}  // namespace cpt

#endif  // CPT_PROCESS_HPP
