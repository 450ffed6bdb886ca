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

#include "cpt/pairs.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>
#include <utility>

#include "cpt/checkpoint.hpp"
#include "cpt/errors.hpp"
#include "json.hpp"

namespace cpt::pairs {

using nlohmann::ordered_json;

namespace {

std::string token_key(const lexdiff::TokenSeq& tokens) {
  std::string key;
  for (const auto& t : tokens.tokens) {
    key += t.text;
    key += '\x1f';
  }
  return key;
}

std::pair<std::string, std::string> id_pair(const ScoredPair& p) {
  const auto& x = p.a->candidate_id;
  const auto& y = p.b->candidate_id;
  return x <= y ? std::make_pair(x, y) : std::make_pair(y, x);
}

struct TaskOutcome {
  std::vector<DatasetInstance> instances;
  DatasetStats stats;
};

TaskOutcome process_task(const tasks::TaskSpec& task, const DatasetHooks& hooks,
                         const PipelineConfig& config) {
  TaskOutcome out;
  DatasetStats& st = out.stats;
  st.tasks_attempted = 1;
  std::vector<RawCandidate> raw = hooks.candidates(task);
  st.candidates_total = static_cast<int>(raw.size());

  std::vector<Candidate> cands;
  std::vector<const RawCandidate*> origin;
  for (const auto& r : raw) {
    Candidate c;
    c.candidate_id = r.candidate_id;
    c.source = r.source;
    try {
      c.tokens = lexdiff::tokenize(r.source);
    } catch (const LexError&) {
      c.tokens = {};
    }
    cands.push_back(std::move(c));
  }
  std::vector<Candidate> unique = dedup_candidates(cands);
  st.duplicates_removed = static_cast<int>(cands.size() - unique.size());

  std::vector<Candidate> scored_cands;
  for (auto& c : unique) {
    if (c.tokens.size() == 0) {
      // Unlexable or empty: no usable tokens for diffing or similarity.
      ++st.candidates_zero_score;
      continue;
    }
    RawCandidate r{c.candidate_id, c.source};
    CandidateEvaluation ev = hooks.evaluate(task, r);
    c.quality = ev.quality;
    c.test_passes = ev.essential_passes;
    scored_cands.push_back(std::move(c));
  }
  std::vector<Candidate> kept = filter_candidates(scored_cands);
  st.candidates_zero_score +=
      static_cast<int>(scored_cands.size() - kept.size());
  if (kept.size() < 2) {
    st.tasks_filtered = 1;
    return out;
  }

  std::vector<ScoredPair> accepted;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    for (std::size_t j = i + 1; j < kept.size(); ++j) {
      ++st.pairs_considered;
      ScoreResult r = score_pair(kept[i], kept[j], config);
      if (r.rejection == Rejection::kDelta) {
        ++st.pairs_rejected_delta;
      } else if (r.rejection == Rejection::kSimilarity) {
        ++st.pairs_rejected_similarity;
      } else {
        accepted.push_back({&kept[i], &kept[j], r.score});
      }
    }
  }
  if (accepted.empty()) {
    st.tasks_no_valid_pair = 1;
    return out;
  }
  auto chosen = select_pairs(std::move(accepted), config.max_pairs_per_task);
  if (chosen.size() == 1 &&
      (chosen[0].a->test_passes < 1 || chosen[0].b->test_passes < 1)) {
    st.tasks_test_fallback = 1;
  }
  const Vocabulary* mask_vocab =
      config.diff_tokens == DiffTokens::kModel ? hooks.vocab : nullptr;
  for (const auto& p : chosen) {
    out.instances.push_back(build_instance(task.task_id, task.instruction,
                                           *p.a, *p.b, p.score, mask_vocab));
  }
  st.tasks_with_pairs = 1;
  st.instances = static_cast<int>(out.instances.size());
  return out;
}

void merge_stats(DatasetStats& into, const DatasetStats& s) {
  into.tasks_attempted += s.tasks_attempted;
  into.tasks_with_pairs += s.tasks_with_pairs;
  into.instances += s.instances;
  into.candidates_total += s.candidates_total;
  into.candidates_zero_score += s.candidates_zero_score;
  into.duplicates_removed += s.duplicates_removed;
  into.pairs_considered += s.pairs_considered;
  into.pairs_rejected_delta += s.pairs_rejected_delta;
  into.pairs_rejected_similarity += s.pairs_rejected_similarity;
  into.tasks_filtered += s.tasks_filtered;
  into.tasks_no_valid_pair += s.tasks_no_valid_pair;
  into.tasks_test_fallback += s.tasks_test_fallback;
  into.tasks_failed += s.tasks_failed;
  for (const auto& [k, v] : s.failures) into.failures[k] = v;
}

}  // namespace

void PipelineConfig::validate() const {
  if (n_samples_per_task < 1) {
    throw ParameterError("n_samples_per_task must be >= 1");
  }
  if (!(delta_min > 0.0)) throw ParameterError("delta_min must be > 0");
  if (!(similarity_min >= 0.0 && similarity_min <= 1.0)) {
    throw ParameterError("similarity_min must lie in [0, 1]");
  }
  if (!(beta1 >= 0.0 && beta2 >= 0.0)) {
    throw ParameterError("beta1 and beta2 must be non-negative");
  }
  if (max_pairs_per_task < 1) {
    throw ParameterError("max_pairs_per_task must be >= 1");
  }
  if (!(test_timeout_seconds > 0.0)) {
    throw ParameterError("test_timeout_seconds must be > 0");
  }
}

std::vector<Candidate> filter_candidates(const std::vector<Candidate>& cands) {
  std::vector<Candidate> out;
  for (const auto& c : cands) {
    if (c.quality > 0.0) out.push_back(c);
  }
  return out;
}

std::vector<Candidate> dedup_candidates(const std::vector<Candidate>& cands) {
  std::vector<Candidate> out;
  std::set<std::string> seen;
  for (const auto& c : cands) {
    if (seen.insert(token_key(c.tokens)).second) out.push_back(c);
  }
  return out;
}

ScoreResult score_pair(const Candidate& a, const Candidate& b,
                       const PipelineConfig& config) {
  ScoreResult r;
  r.score.delta = std::abs(a.quality - b.quality);
  r.score.delta_norm = r.score.delta / 10.0;
  try {
    r.score.similarity = lexdiff::bag_cosine(a.tokens, b.tokens);
  } catch (const UndefinedSimilarityError&) {
    r.score.similarity = 0.0;
  }
  r.score.combined = config.beta1 * r.score.delta_norm +
                     config.beta2 * r.score.similarity;
  if (!(r.score.delta > config.delta_min)) {
    r.rejection = Rejection::kDelta;
  } else if (!(r.score.similarity > config.similarity_min)) {
    r.rejection = Rejection::kSimilarity;
  }
  return r;
}

std::vector<ScoredPair> select_pairs(std::vector<ScoredPair> scored,
                                     int max_pairs) {
  std::vector<ScoredPair> out;
  if (scored.empty()) return out;
  std::stable_sort(scored.begin(), scored.end(),
                   [](const ScoredPair& x, const ScoredPair& y) {
                     if (x.score.combined != y.score.combined) {
                       return x.score.combined > y.score.combined;
                     }
                     return id_pair(x) < id_pair(y);
                   });
  for (const auto& p : scored) {
    if (static_cast<int>(out.size()) >= max_pairs) break;
    if (p.a->test_passes >= 1 && p.b->test_passes >= 1) out.push_back(p);
  }
  if (out.empty()) out.push_back(scored.front());
  return out;
}

std::optional<ScoredPair> select_pair(std::vector<ScoredPair> scored) {
  auto out = select_pairs(std::move(scored), 1);
  if (out.empty()) return std::nullopt;
  return out.front();
}

DatasetInstance build_instance(const std::string& task_id,
                               const std::string& instruction,
                               const Candidate& a, const Candidate& b,
                               const PairScore& score, const Vocabulary* vocab) {
  if (a.quality == b.quality) {
    throw OrientationError("pair members of task " + task_id +
                           " have equal quality " + std::to_string(a.quality));
  }
  const Candidate& hi = a.quality > b.quality ? a : b;
  const Candidate& lo = a.quality > b.quality ? b : a;
  DatasetInstance inst;
  inst.task_id = task_id;
  inst.instruction = instruction;
  inst.a_candidate = hi.candidate_id;
  inst.b_candidate = lo.candidate_id;
  inst.a_tokens = hi.tokens;
  inst.b_tokens = lo.tokens;
  if (vocab) {
    auto ia = vocab->encode(hi.tokens);
    auto ib = vocab->encode(lo.tokens);
    std::tie(inst.a_mask, inst.b_mask) = lexdiff::build_masks(ia, ib);
  } else {
    std::tie(inst.a_mask, inst.b_mask) = lexdiff::build_masks(hi.tokens,
                                                              lo.tokens);
  }
  inst.a_score = hi.quality;
  inst.b_score = lo.quality;
  inst.similarity = score.similarity;
  inst.combined = score.combined;
  return inst;
}

DatasetResult build_dataset(const std::vector<tasks::TaskSpec>& tasks,
                            const DatasetHooks& hooks,
                            const PipelineConfig& config) {
  config.validate();
  if (!hooks.candidates || !hooks.evaluate) {
    throw ParameterError("build_dataset needs candidate and evaluation hooks");
  }
  std::vector<TaskOutcome> outcomes(tasks.size());
  auto run_one = [&](std::size_t i) {
    try {
      outcomes[i] = process_task(tasks[i], hooks, config);
    } catch (const std::exception& e) {
      TaskOutcome failed;
      failed.stats.tasks_attempted = 1;
      failed.stats.tasks_failed = 1;
      failed.stats.failures[tasks[i].task_id] = e.what();
      outcomes[i] = std::move(failed);
    }
  };
  const int workers = std::max(1, hooks.workers);
  if (workers == 1 || tasks.size() < 2) {
    for (std::size_t i = 0; i < tasks.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) run_one(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  DatasetResult result;
  for (auto& o : outcomes) {
    merge_stats(result.stats, o.stats);
    for (auto& inst : o.instances) result.instances.push_back(std::move(inst));
  }
  return result;
}

std::string instance_to_json(const DatasetInstance& inst) {
  ordered_json j;
  j["task_id"] = inst.task_id;
  j["instruction"] = inst.instruction;
  j["a_candidate"] = inst.a_candidate;
  j["b_candidate"] = inst.b_candidate;
  j["a_tokens"] = inst.a_tokens.texts();
  j["a_mask"] = inst.a_mask;
  j["b_tokens"] = inst.b_tokens.texts();
  j["b_mask"] = inst.b_mask;
  j["a_score"] = inst.a_score;
  j["b_score"] = inst.b_score;
  j["similarity"] = inst.similarity;
  j["combined"] = inst.combined;
  return j.dump();
}

DatasetInstance instance_from_json(const std::string& line) {
  DatasetInstance inst;
  try {
    auto j = nlohmann::json::parse(line);
    inst.task_id = j.at("task_id").get<std::string>();
    inst.instruction = j.at("instruction").get<std::string>();
    inst.a_candidate = j.value("a_candidate", std::string{});
    inst.b_candidate = j.value("b_candidate", std::string{});
    auto at = j.at("a_tokens").get<std::vector<std::string>>();
    auto bt = j.at("b_tokens").get<std::vector<std::string>>();
    inst.a_tokens = lexdiff::TokenSeq::from_texts(at);
    inst.b_tokens = lexdiff::TokenSeq::from_texts(bt);
    inst.a_mask = j.at("a_mask").get<lexdiff::MaskVector>();
    inst.b_mask = j.at("b_mask").get<lexdiff::MaskVector>();
    inst.a_score = j.at("a_score").get<double>();
    inst.b_score = j.at("b_score").get<double>();
    inst.similarity = j.at("similarity").get<double>();
    inst.combined = j.at("combined").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed dataset record: ") + e.what());
  }
  if (inst.a_mask.size() != inst.a_tokens.size() ||
      inst.b_mask.size() != inst.b_tokens.size()) {
    throw MaskAlignmentError("dataset record for task " + inst.task_id +
                             " has masks that do not match its tokens");
  }
  return inst;
}

std::string serialize_dataset(const std::vector<DatasetInstance>& instances) {
  std::string out;
  for (const auto& inst : instances) {
    out += instance_to_json(inst);
    out += '\n';
  }
  return out;
}

void save_dataset(const std::filesystem::path& path,
                  const std::vector<DatasetInstance>& instances) {
  checkpoint::write_file_atomic(path, serialize_dataset(instances));
}

std::vector<DatasetInstance> load_dataset(const std::filesystem::path& path) {
  std::istringstream in(checkpoint::read_file(path));
  std::vector<DatasetInstance> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(instance_from_json(line));
  }
  return out;
}

std::string stats_to_json(const DatasetStats& s) {
  ordered_json j;
  j["tasks_attempted"] = s.tasks_attempted;
  j["tasks_with_pairs"] = s.tasks_with_pairs;
  j["instances"] = s.instances;
  j["candidates_total"] = s.candidates_total;
  j["candidates_zero_score"] = s.candidates_zero_score;
  j["duplicates_removed"] = s.duplicates_removed;
  j["pairs_considered"] = s.pairs_considered;
  j["pairs_rejected_delta"] = s.pairs_rejected_delta;
  j["pairs_rejected_similarity"] = s.pairs_rejected_similarity;
  j["tasks_filtered"] = s.tasks_filtered;
  j["tasks_no_valid_pair"] = s.tasks_no_valid_pair;
  j["tasks_test_fallback"] = s.tasks_test_fallback;
  j["tasks_failed"] = s.tasks_failed;
  j["failures"] = s.failures;
  return j.dump(1) + "\n";
}

train::TrainingExample to_training_example(const DatasetInstance& inst,
                                           const Vocabulary& vocab) {
  if (inst.a_mask.size() != inst.a_tokens.size() ||
      inst.b_mask.size() != inst.b_tokens.size()) {
    throw MaskAlignmentError("instance for task " + inst.task_id +
                             " has misaligned masks");
  }
  train::TrainingExample ex;
  ex.instruction = vocab.encode(tasks::instruction_words(inst.instruction));
  ex.a_ids = vocab.encode(inst.a_tokens);
  ex.b_ids = vocab.encode(inst.b_tokens);
  ex.a_mask = inst.a_mask;
  ex.b_mask = inst.b_mask;
  ex.a_ids.push_back(Vocabulary::kEos);
  ex.b_ids.push_back(Vocabulary::kEos);
  ex.a_mask.push_back(0);
  ex.b_mask.push_back(0);
  return ex;
}

}  // namespace cpt::pairs
