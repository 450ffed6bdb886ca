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

#ifndef CPT_PAIRS_HPP
#define CPT_PAIRS_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cpt/lexdiff.hpp"
#include "cpt/losses.hpp"
#include "cpt/quality.hpp"
#include "cpt/tasks.hpp"
#include "cpt/vocab.hpp"

namespace cpt::pairs {

struct Candidate {
  std::string candidate_id;
  lexdiff::TokenSeq tokens;
  std::string source;
  double quality = 0.0;
  int test_passes = 0;  // essential tests passed
};

struct PairScore {
  double delta = 0.0;       // |s_a - s_b|
  double delta_norm = 0.0;  // delta / 10
  double similarity = 0.0;
  double combined = 0.0;
};

struct DatasetInstance {
  std::string task_id;
  std::string instruction;
  std::string a_candidate, b_candidate;
  lexdiff::TokenSeq a_tokens, b_tokens;  // a is the higher-quality member
  lexdiff::MaskVector a_mask, b_mask;
  double a_score = 0.0, b_score = 0.0;
  double similarity = 0.0, combined = 0.0;
};

// Token stream the edit masks are computed over.
enum class DiffTokens { kModel, kLexical };

struct PipelineConfig {
  int n_samples_per_task = 20;
  double delta_min = 1.0;  // on the 0-10 score scale
  double similarity_min = 0.4;
  double beta1 = 0.7;
  double beta2 = 0.3;
  std::uint64_t seed = 0;
  int max_pairs_per_task = 1;
  double test_timeout_seconds = 10.0;
  DiffTokens diff_tokens = DiffTokens::kModel;

  void validate() const;
};

// Keeps candidates with quality > 0, in order.
std::vector<Candidate> filter_candidates(const std::vector<Candidate>& cands);

// Drops candidates whose token text repeats an earlier one.
std::vector<Candidate> dedup_candidates(const std::vector<Candidate>& cands);

enum class Rejection { kNone, kDelta, kSimilarity };

struct ScoreResult {
  PairScore score;
  Rejection rejection = Rejection::kNone;
  bool accepted() const { return rejection == Rejection::kNone; }
};

// Accepts when delta > delta_min and similarity > similarity_min.
ScoreResult score_pair(const Candidate& a, const Candidate& b,
                       const PipelineConfig& config);

struct ScoredPair {
  const Candidate* a = nullptr;
  const Candidate* b = nullptr;
  PairScore score;
};

// Sorted by combined descending, ties by the sorted candidate-id pair. Takes
// up to max_pairs pairs whose members both pass an essential test; if none
// does, the single best pair.
std::vector<ScoredPair> select_pairs(std::vector<ScoredPair> scored,
                                     int max_pairs);
std::optional<ScoredPair> select_pair(std::vector<ScoredPair> scored);

// Orients the pair (higher quality first) and derives masks. When vocab is
// given, masks are diffed over model ids, otherwise over lexical tokens.
// Throws OrientationError on equal scores.
DatasetInstance build_instance(const std::string& task_id,
                               const std::string& instruction,
                               const Candidate& a, const Candidate& b,
                               const PairScore& score,
                               const Vocabulary* vocab = nullptr);

struct RawCandidate {
  std::string candidate_id;
  std::string source;
};

struct CandidateEvaluation {
  double quality = 0.0;
  int essential_passes = 0;
};

struct DatasetHooks {
  std::function<std::vector<RawCandidate>(const tasks::TaskSpec&)> candidates;
  std::function<CandidateEvaluation(const tasks::TaskSpec&,
                                    const RawCandidate&)>
      evaluate;
  const Vocabulary* vocab = nullptr;
  int workers = 1;
};

struct DatasetStats {
  int tasks_attempted = 0;
  int tasks_with_pairs = 0;
  int instances = 0;
  int candidates_total = 0;
  int candidates_zero_score = 0;
  int duplicates_removed = 0;
  int pairs_considered = 0;
  int pairs_rejected_delta = 0;
  int pairs_rejected_similarity = 0;
  int tasks_filtered = 0;       // fewer than two usable candidates
  int tasks_no_valid_pair = 0;  // every pair rejected by a threshold
  int tasks_test_fallback = 0;  // no pair passed essential tests
  int tasks_failed = 0;
  std::map<std::string, std::string> failures;  // task_id -> message
};

struct DatasetResult {
  std::vector<DatasetInstance> instances;
  DatasetStats stats;
};

// Runs the pair pipeline for every task. Per-task errors are recorded in the
// statistics. Output order follows the task list regardless of workers.
DatasetResult build_dataset(const std::vector<tasks::TaskSpec>& tasks,
                            const DatasetHooks& hooks,
                            const PipelineConfig& config);

std::string instance_to_json(const DatasetInstance& inst);
DatasetInstance instance_from_json(const std::string& line);
std::string serialize_dataset(const std::vector<DatasetInstance>& instances);
void save_dataset(const std::filesystem::path& path,
                  const std::vector<DatasetInstance>& instances);
std::vector<DatasetInstance> load_dataset(const std::filesystem::path& path);
std::string stats_to_json(const DatasetStats& stats);

// Model-space training example: ids of the instruction words and of each
// code sequence followed by <eos> (mask 0). Throws MaskAlignmentError when
// a mask does not match its tokens.
train::TrainingExample to_training_example(const DatasetInstance& inst,
                                           const Vocabulary& vocab);

}  // namespace cpt::pairs

#endif  // CPT_PAIRS_HPP
