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

#include "cpt_cli/pipeline.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "cpt/checkpoint.hpp"
#include "cpt/errors.hpp"
#include "cpt/lexdiff.hpp"
#include "cpt/random.hpp"
#include "json.hpp"

namespace cpt::cli {

namespace {

const std::vector<quality::MockRule>& mock_rules() {
  static const std::vector<quality::MockRule> rules =
      quality::default_mock_rules();
  return rules;
}

fs::path temp_source_file(const std::string& source) {
  std::string tmpl =
      (fs::temp_directory_path() / "cpt-src-XXXXXX.py").string();
  std::vector<char> buf(tmpl.begin(), tmpl.end());
  buf.push_back('\0');
  int fd = ::mkstemps(buf.data(), 3);
  if (fd < 0) throw Error("cannot create a temporary source file");
  ::close(fd);
  fs::path path(buf.data());
  std::ofstream(path, std::ios::binary) << source;
  return path;
}

std::vector<pairs::RawCandidate> stored_candidates(const fs::path& root,
                                                   const std::string& id) {
  std::vector<pairs::RawCandidate> out;
  const fs::path dir = root / id;
  if (!fs::is_directory(dir)) return out;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".py") {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    out.push_back({f.stem().string(), checkpoint::read_file(f)});
  }
  return out;
}

}  // namespace

std::uint64_t task_seed(std::uint64_t base, const std::string& task_id) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : task_id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return derive_seed(base, h);
}

void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  const auto count = std::min<std::size_t>(static_cast<std::size_t>(workers),
                                            n);
  for (std::size_t w = 0; w < count; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

quality::LintReport analyze_source(const RunConfig& config,
                                   const std::string& source) {
  if (config.analyzer_kind == AnalyzerKind::kMock) {
    return quality::mock_analyze_source(source, mock_rules(),
                                        config.analyzer.filter);
  }
  fs::path tmp = temp_source_file(source);
  try {
    auto report = quality::run_external_analyzer(tmp, config.analyzer);
    fs::remove(tmp);
    return report;
  } catch (...) {
    fs::remove(tmp);
    throw;
  }
}

quality::LintReport analyze_file(const RunConfig& config,
                                 const fs::path& path) {
  if (config.analyzer_kind == AnalyzerKind::kMock) {
    return quality::mock_analyze_source(checkpoint::read_file(path),
                                        mock_rules(), config.analyzer.filter);
  }
  if (!fs::exists(path)) throw Error("no such file: " + path.string());
  return quality::run_external_analyzer(path, config.analyzer);
}

std::vector<std::string> sample_sources(const model::BaseParams& base,
                                        const model::PrefixParams* prefix,
                                        const Vocabulary& vocab,
                                        const std::string& instruction,
                                        const model::GenerationConfig& gen) {
  auto ids = vocab.encode(tasks::instruction_words(instruction));
  auto samples = model::generate(base, prefix, ids, gen, Vocabulary::kEos);
  std::vector<std::string> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    out.push_back(lexdiff::detokenize(vocab.decode(s)));
  }
  return out;
}

eval::TaskResult score_samples(const RunConfig& config,
                               const tasks::TaskSpec& task,
                               const std::vector<std::string>& sources,
                               bool run_tests) {
  eval::TaskResult result;
  result.task_id = task.task_id;
  result.category = eval::normalize_category(task.category);
  for (const auto& src : sources) {
    quality::LintReport report = analyze_source(config, src);
    eval::SampleResult s;
    s.quality = quality::compute_quality_score(report);
    s.valid = !report.fatal;
    s.issues = report.issues;
    if (run_tests && !task.tests.empty()) {
      s.passed_all_tests =
          tasks::run_tests_on_source(task, src,
                                     config.pipeline.test_timeout_seconds)
              .passed_all();
    }
    result.samples.push_back(std::move(s));
  }
  return result;
}

void save_corpus(const fs::path& path,
                 const std::vector<synth::CorpusEntry>& corpus) {
  std::string out;
  for (const auto& e : corpus) {
    nlohmann::ordered_json j;
    j["task_id"] = e.task_id;
    j["instruction"] = e.instruction;
    j["source"] = e.source;
    out += j.dump();
    out += '\n';
  }
  checkpoint::write_file_atomic(path, out);
}

std::vector<synth::CorpusEntry> load_corpus(const fs::path& path) {
  std::istringstream in(checkpoint::read_file(path));
  std::vector<synth::CorpusEntry> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      out.push_back({j.value("task_id", std::string{}),
                     j.value("instruction", std::string{}),
                     j.at("source").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("corpus " + path.string() + " line " +
                        std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

Vocabulary build_vocabulary(const std::vector<synth::CorpusEntry>& corpus,
                            int max_size) {
  std::vector<lexdiff::TokenSeq> seqs;
  seqs.reserve(corpus.size() * 2);
  for (const auto& e : corpus) {
    seqs.push_back(lexdiff::TokenSeq::from_texts(
        tasks::instruction_words(e.instruction)));
    try {
      seqs.push_back(lexdiff::tokenize(e.source));
    } catch (const LexError&) {
      // Unlexable corpus entries contribute only their instruction words.
    }
  }
  return Vocabulary::build(seqs, static_cast<std::size_t>(max_size));
}

std::vector<std::vector<int>> encode_corpus(
    const std::vector<synth::CorpusEntry>& corpus, const Vocabulary& vocab,
    int max_context) {
  std::vector<std::vector<int>> out;
  for (const auto& e : corpus) {
    lexdiff::TokenSeq code;
    try {
      code = lexdiff::tokenize(e.source);
    } catch (const LexError&) {
      continue;
    }
    auto instr = vocab.encode(tasks::instruction_words(e.instruction));
    auto ids = model::conditioned_ids(instr, vocab.encode(code));
    ids.push_back(Vocabulary::kEos);
    if (static_cast<int>(ids.size()) > max_context) {
      ids.resize(static_cast<std::size_t>(max_context));
    }
    out.push_back(std::move(ids));
  }
  return out;
}

model::BaseParams pretrain_base(const RunConfig& config,
                                const std::vector<synth::CorpusEntry>& corpus,
                                const Vocabulary& vocab,
                                const std::function<void(int, double)>&
                                    on_epoch) {
  train::BaseTrainConfig bc;
  bc.model = config.model;
  bc.model.vocab = vocab.size();
  bc.learning_rate = config.pretrain.learning_rate;
  bc.epochs = config.pretrain.epochs;
  bc.init_scale = config.pretrain.init_scale;
  bc.clip_norm = config.train.clip_norm;
  bc.seed = config.stream_seed(kStreamPretrain);
  auto seqs = encode_corpus(corpus, vocab, bc.model.max_context);
  return train::train_base(seqs, bc, on_epoch);
}

pairs::DatasetResult build_dataset(const RunConfig& config,
                                   const std::vector<tasks::TaskSpec>& tasks,
                                   const model::BaseParams& base,
                                   const Vocabulary& vocab) {
  pairs::DatasetHooks hooks;
  hooks.vocab = &vocab;
  hooks.workers = config.workers;
  const std::uint64_t cand_seed = config.stream_seed(kStreamCandidates);
  hooks.candidates = [&](const tasks::TaskSpec& task) {
    if (!config.paths.candidates.empty()) {
      return stored_candidates(config.paths.candidates, task.task_id);
    }
    model::GenerationConfig gen = config.generation;
    gen.n_samples = config.pipeline.n_samples_per_task;
    gen.seed = task_seed(cand_seed, task.task_id);
    auto sources = sample_sources(base, nullptr, vocab, task.instruction, gen);
    std::vector<pairs::RawCandidate> out;
    for (std::size_t i = 0; i < sources.size(); ++i) {
      std::ostringstream id;
      id << "s" << (i < 10 ? "0" : "") << i;
      out.push_back({id.str(), sources[i]});
    }
    return out;
  };
  hooks.evaluate = [&](const tasks::TaskSpec& task,
                       const pairs::RawCandidate& cand) {
    pairs::CandidateEvaluation ev;
    auto report = analyze_source(config, cand.source);
    ev.quality = quality::compute_quality_score(report);
    if (ev.quality > 0.0 && !task.tests.empty()) {
      ev.essential_passes =
          tasks::run_tests_on_source(task, cand.source,
                                     config.pipeline.test_timeout_seconds)
              .essential_passed;
    }
    return ev;
  };
  return pairs::build_dataset(tasks, hooks, config.pipeline);
}

std::vector<train::TrainingExample> training_examples(
    const std::vector<pairs::DatasetInstance>& dataset,
    const Vocabulary& vocab) {
  std::vector<train::TrainingExample> out;
  out.reserve(dataset.size());
  for (const auto& inst : dataset) {
    out.push_back(pairs::to_training_example(inst, vocab));
  }
  return out;
}

}  // namespace cpt::cli
