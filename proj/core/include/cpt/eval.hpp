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

#ifndef CPT_EVAL_HPP
#define CPT_EVAL_HPP

#include <map>
#include <string>
#include <vector>

#include "cpt/quality.hpp"

namespace cpt::eval {

// 1 - C(n - c, k) / C(n, k). Requires 0 <= c <= n and 1 <= k <= n, else
// throws ParameterError.
double pass_at_k(int n, int c, int k);

struct SampleResult {
  double quality = 0.0;
  bool passed_all_tests = false;
  bool valid = true;  // analyzer report was non-fatal
  std::vector<quality::IssueRecord> issues;
};

struct TaskResult {
  std::string task_id;
  std::string category = "other";  // introductory, interview, competition
  std::vector<SampleResult> samples;
};

// Maps free-form labels onto the four known categories.
std::string normalize_category(const std::string& label);

struct CategoryStats {
  int tasks = 0;
  double mean_of_means = 0.0;
  double mean_of_maxes = 0.0;
  double mean_of_mins = 0.0;
};

// Keyed by category plus an "all" entry spanning every task.
using QualityAggregate = std::map<std::string, CategoryStats>;

// Throws ParameterError on an empty list or a task without samples.
QualityAggregate aggregate_quality(const std::vector<TaskResult>& results);

// Mean over tasks of pass_at_k(n_task, c_task, k); tasks with fewer than k
// samples are left out. Returns -1 when no task qualifies.
double mean_pass_at_k(const std::vector<TaskResult>& results, int k);

struct IssueDelta {
  std::string check_id;
  char category = 'W';
  int baseline_count = 0;
  int optimized_count = 0;
  int change = 0;
  double baseline_avg_score = 0.0;
  double optimized_avg_score = 0.0;
};

// Occurrence counts over the first `per_task_cap` valid samples of each task.
// Sorted by category (E, R, C, W, F) then check id. Throws AlignmentError when
// the two sides cover different task ids.
std::vector<IssueDelta> issue_frequency_report(
    const std::vector<TaskResult>& baseline,
    const std::vector<TaskResult>& optimized, int per_task_cap = 10);

// Plain-text tables with right-aligned numeric columns.
std::string render_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows);
std::string render_csv(const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows);

std::string format_fixed(double v, int digits);

}  // namespace cpt::eval

#endif  // CPT_EVAL_HPP
