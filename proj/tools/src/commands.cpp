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

#include "cpt_cli/commands.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "cpt/checkpoint.hpp"
#include "cpt/errors.hpp"
#include "cpt/eval.hpp"
#include "cpt/pairs.hpp"
#include "cpt/synth.hpp"
#include "cpt/tasks.hpp"
#include "cpt/trainer.hpp"
#include "cpt_cli/pipeline.hpp"
#include "cpt_cli/run_config.hpp"

namespace cpt::cli {

using nlohmann::ordered_json;

namespace {

// Advisory lock on <dir>/.cpt.lock, held for the lifetime of the object.
class DirLock {
 public:
  explicit DirLock(const fs::path& dir) {
    fs::create_directories(dir);
    path_ = dir / ".cpt.lock";
    fd_ = ::open(path_.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error("cannot open lock file " + path_.string());
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      throw Error("another cpt process is using " + dir.string());
    }
  }
  ~DirLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  fs::path path_;
  int fd_ = -1;
};

void require_file(const fs::path& p, const std::string& what) {
  if (p.empty()) throw ParameterError(what + " path is not set");
  if (!fs::is_regular_file(p)) {
    throw Error(what + " not found: " + p.string());
  }
}

std::string fmt(double v, int digits = 2) { return eval::format_fixed(v, digits); }

std::string json_line(const train::StepLog& s) {
  ordered_json j;
  j["stage"] = s.stage;
  j["step"] = s.step;
  j["epoch"] = s.epoch;
  j["lm"] = s.loss.lm;
  j["rank"] = s.loss.rank;
  j["kl"] = s.loss.kl;
  j["total"] = s.loss.total;
  j["grad_norm"] = s.grad_norm;
  return j.dump();
}

void append_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::app);
  out << text;
  if (!out) throw Error("cannot write " + p.string());
}

std::string category_for(const synth::Skeleton& s) {
  int n = s.idiom_count();
  if (n <= 2) return "introductory";
  if (n == 3) return "interview";
  return "competition";
}

// ---- verbs ---------------------------------------------------------------

int cmd_synth(const RunConfig& c, std::ostream& out) {
  DirLock lock(c.paths.out_dir);
  auto skeletons = synth::make_skeletons(c.synth.tasks,
                                         c.stream_seed(kStreamSynth));
  std::vector<tasks::TaskSpec> all, train_tasks, heldout;
  const auto n_train = skeletons.size() -
                       static_cast<std::size_t>(c.synth.heldout);
  for (std::size_t i = 0; i < skeletons.size(); ++i) {
    auto spec = synth::task_spec(skeletons[i], category_for(skeletons[i]));
    all.push_back(spec);
    (i < n_train ? train_tasks : heldout).push_back(spec);
  }
  auto corpus = synth::pretraining_corpus(skeletons, c.synth.variants,
                                          c.stream_seed(kStreamSynth));
  const fs::path dir = c.paths.out_dir;
  tasks::save_manifest(dir / "tasks.json", all);
  tasks::save_manifest(dir / "train_tasks.json", train_tasks);
  tasks::save_manifest(dir / "heldout_tasks.json", heldout);
  save_corpus(dir / "corpus.jsonl", corpus);
  out << "synthetic tasks: " << all.size() << " (train " << train_tasks.size()
      << ", held-out " << heldout.size() << "), corpus entries: "
      << corpus.size() << "\n";
  return kExitOk;
}

int cmd_pretrain(const RunConfig& c, std::ostream& out) {
  const fs::path corpus_path = c.paths.corpus.empty()
                                   ? c.paths.out_dir / "corpus.jsonl"
                                   : c.paths.corpus;
  require_file(corpus_path, "corpus");
  auto corpus = load_corpus(corpus_path);
  if (corpus.empty()) throw Error("corpus is empty: " + corpus_path.string());
  DirLock lock(c.paths.out_dir);
  Vocabulary vocab = build_vocabulary(corpus, c.pretrain.max_vocab);
  const fs::path log_path = c.paths.out_dir / "pretrain_log.jsonl";
  checkpoint::write_file_atomic(log_path, "");
  auto base = pretrain_base(c, corpus, vocab, [&](int epoch, double nll) {
    ordered_json j;
    j["epoch"] = epoch;
    j["nll"] = nll;
    append_text(log_path, j.dump() + "\n");
    out << "epoch " << epoch << " mean nll " << fmt(nll, 4) << "\n";
  });
  checkpoint::save_base(c.base_path(), base, vocab);
  out << "vocabulary " << vocab.size() << " tokens; base written to "
      << c.base_path().string() << "\n";
  return kExitOk;
}

int cmd_analyze(const RunConfig& c, const std::vector<std::string>& files,
                bool verbose, std::ostream& out, std::ostream& err) {
  int status = kExitOk;
  for (const auto& f : files) {
    try {
      auto report = analyze_file(c, f);
      double q = quality::compute_quality_score(report);
      out << f << "\t" << fmt(q) << "\n";
      if (verbose) {
        for (const auto& i : report.issues) {
          out << "  " << i.line << ": " << i.check_id << " " << i.message
              << "\n";
        }
      }
    } catch (const Error& e) {
      err << "cpt analyze: " << f << ": " << e.what() << "\n";
      status = kExitInput;
    }
  }
  return status;
}

fs::path manifest_path(const RunConfig& c) {
  return c.paths.manifest.empty() ? c.paths.out_dir / "tasks.json"
                                  : c.paths.manifest;
}

int cmd_build_dataset(const RunConfig& c, std::ostream& out,
                      std::ostream& err) {
  const fs::path mpath = manifest_path(c);
  require_file(mpath, "task manifest");
  require_file(c.base_path(), "base checkpoint");
  if (!c.paths.candidates.empty() && !fs::is_directory(c.paths.candidates)) {
    throw Error("candidate directory not found: " +
                c.paths.candidates.string());
  }
  auto task_list = tasks::load_manifest(mpath);
  auto loaded = checkpoint::load_base(c.base_path());
  DirLock lock(c.paths.out_dir);
  pairs::DatasetResult result;
  if (task_list.empty()) {
    err << "cpt build-dataset: warning: task manifest is empty\n";
  } else {
    result = build_dataset(c, task_list, loaded.params, loaded.vocab);
  }
  pairs::save_dataset(c.dataset_path(), result.instances);
  checkpoint::write_file_atomic(c.paths.out_dir / "dataset_stats.json",
                                pairs::stats_to_json(result.stats));
  const auto& s = result.stats;
  out << "tasks in: " << s.tasks_attempted << ", pairs out: " << s.instances
      << "\n"
      << "filtered: " << s.tasks_filtered
      << ", no valid pair: " << s.tasks_no_valid_pair
      << ", test fallback: " << s.tasks_test_fallback
      << ", failed: " << s.tasks_failed << "\n"
      << "pairs rejected (delta): " << s.pairs_rejected_delta
      << ", (similarity): " << s.pairs_rejected_similarity << "\n";
  for (const auto& [task, msg] : s.failures) {
    err << "cpt build-dataset: task " << task << " failed: " << msg << "\n";
  }
  return kExitOk;
}

checkpoint::TrainState to_state(const train::TrainProgress& p, int stage) {
  checkpoint::TrainState s;
  s.state = p.state;
  s.adam_m = p.optimizer.m;
  s.adam_v = p.optimizer.v;
  s.adam_step = p.optimizer.step;
  s.stage = stage;
  s.epochs_done = p.epochs_done;
  return s;
}

train::TrainProgress from_state(const checkpoint::TrainState& s) {
  train::TrainProgress p;
  p.state = s.state;
  p.optimizer.m = s.adam_m;
  p.optimizer.v = s.adam_v;
  p.optimizer.step = s.adam_step;
  p.epochs_done = s.epochs_done;
  return p;
}

int cmd_train(const RunConfig& c, std::ostream& out, std::ostream& err) {
  require_file(c.base_path(), "base checkpoint");
  require_file(c.dataset_path(), "dataset");
  auto loaded = checkpoint::load_base(c.base_path());
  auto dataset = pairs::load_dataset(c.dataset_path());
  if (dataset.empty()) throw Error("dataset is empty: " +
                                   c.dataset_path().string());
  auto examples = training_examples(dataset, loaded.vocab);
  const model::ModelConfig& mc = loaded.params.config;
  DirLock lock(c.paths.out_dir);

  const fs::path state_path = c.train_state_path();
  const fs::path log_path = c.train_log_path();
  train::TrainProgress progress;
  int stage = 1;
  if (fs::exists(state_path)) {
    auto st = checkpoint::load_train_state(state_path, mc);
    progress = from_state(st);
    stage = st.stage;
    out << "resuming from stage " << stage << " after epoch "
        << progress.epochs_done << "\n";
  } else {
    progress.state = model::init_prefix(mc, c.prefix.length, c.prefix.dim,
                                        c.stream_seed(kStreamPrefixInit),
                                        c.prefix.init_scale);
    checkpoint::write_file_atomic(log_path, "");
  }

  std::string pending;
  train::TrainCallbacks cb;
  cb.on_step = [&](const train::StepLog& s) { pending += json_line(s) + "\n"; };
  cb.on_warning = [&](const std::string& w) {
    err << "cpt train: warning: " << w << "\n";
  };
  auto epoch_hook = [&](int st) {
    return [&, st](const train::TrainProgress& p) {
      checkpoint::save_train_state(state_path, to_state(p, st), mc);
      append_text(log_path, pending);
      pending.clear();
      out << "stage " << st << " epoch " << p.epochs_done << " done\n";
    };
  };

  try {
    if (stage == 1) {
      train::TrainConfig tc = c.train;
      tc.seed = c.stream_seed(kStreamTrain);
      cb.on_epoch = epoch_hook(1);
      auto r = train::train_comparative(examples, loaded.params, progress,
                                        c.weights, tc, cb);
      progress = train::TrainProgress{r.progress.state, {}, 0};
      stage = 2;
      checkpoint::save_train_state(state_path, to_state(progress, 2), mc);
    }
    if (c.skip_basic) {
      out << "skip-basic: basic single-prefix tuning stage skipped\n";
      append_text(log_path, "{\"event\":\"skip_basic\"}\n");
    } else {
      std::vector<train::BasicExample> basic;
      for (const auto& ex : examples) basic.push_back({ex.instruction, ex.a_ids});
      train::TrainConfig bc = c.basic_config();
      bc.seed = c.stream_seed(kStreamTrain);
      cb.on_epoch = epoch_hook(2);
      auto r = train::train_basic(basic, loaded.params, progress, bc, cb);
      progress = r.progress;
    }
  } catch (const NumericError& e) {
    ordered_json diag;
    diag["error"] = e.what();
    diag["stage"] = stage;
    diag["epochs_done"] = progress.epochs_done;
    checkpoint::write_file_atomic(c.paths.out_dir / "train_diagnostic.json",
                                  diag.dump(1) + "\n");
    throw;
  }

  auto prefix = model::materialize_prefix(progress.state, mc);
  checkpoint::save_prefix(c.prefix_path(), prefix, mc,
                          progress.state.d_prime());
  fs::remove(state_path);
  out << "prefix written to " << c.prefix_path().string() << "\n";
  return kExitOk;
}

int cmd_generate(const RunConfig& c, std::ostream& out) {
  const fs::path mpath = manifest_path(c);
  require_file(mpath, "task manifest");
  require_file(c.base_path(), "base checkpoint");
  if (!c.no_prefix) require_file(c.prefix_path(), "prefix checkpoint");
  auto task_list = tasks::load_manifest(mpath);
  auto loaded = checkpoint::load_base(c.base_path());
  std::optional<checkpoint::LoadedPrefix> prefix;
  if (!c.no_prefix) {
    prefix = checkpoint::load_prefix(c.prefix_path());
    if (!(prefix->config == loaded.params.config)) {
      throw DimensionError("prefix checkpoint was trained for a different "
                           "model configuration");
    }
  }
  DirLock lock(c.paths.out_dir);
  const fs::path dir = c.samples_path();
  fs::create_directories(dir);
  std::vector<std::vector<std::string>> files(task_list.size());
  const std::uint64_t gen_seed = c.stream_seed(kStreamGenerate);
  parallel_for(task_list.size(), c.workers, [&](std::size_t i) {
    const auto& task = task_list[i];
    model::GenerationConfig gen = c.generation;
    gen.seed = task_seed(gen_seed, task.task_id);
    auto sources = sample_sources(loaded.params,
                                  prefix ? &prefix->prefix : nullptr,
                                  loaded.vocab, task.instruction, gen);
    const fs::path tdir = dir / task.task_id;
    fs::remove_all(tdir);
    fs::create_directories(tdir);
    for (std::size_t k = 0; k < sources.size(); ++k) {
      std::ostringstream name;
      name << "sample_" << std::setw(3) << std::setfill('0') << k << ".py";
      checkpoint::write_file_atomic(tdir / name.str(), sources[k]);
      files[i].push_back(name.str());
    }
  });
  ordered_json index;
  index["prefix"] = !c.no_prefix;
  index["tasks"] = ordered_json::array();
  std::size_t total = 0;
  for (std::size_t i = 0; i < task_list.size(); ++i) {
    index["tasks"].push_back(
        {{"task_id", task_list[i].task_id}, {"files", files[i]}});
    total += files[i].size();
  }
  checkpoint::write_file_atomic(dir / "index.json", index.dump(1) + "\n");
  out << "wrote " << total << " samples for " << task_list.size()
      << " tasks to " << dir.string() << (c.no_prefix ? " (no prefix)" : "")
      << "\n";
  return kExitOk;
}

struct ArmSamples {
  std::map<std::string, std::vector<std::string>> sources;  // task -> code
};

ArmSamples read_arm(const fs::path& dir) {
  require_file(dir / "index.json", "sample index");
  ArmSamples arm;
  try {
    auto index = nlohmann::json::parse(checkpoint::read_file(dir / "index.json"));
    for (const auto& t : index.at("tasks")) {
      const auto id = t.at("task_id").get<std::string>();
      auto& list = arm.sources[id];
      for (const auto& f : t.at("files")) {
        list.push_back(checkpoint::read_file(dir / id / f.get<std::string>()));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed sample index in " + dir.string() + ": " +
                      e.what());
  }
  return arm;
}

ordered_json arm_json(const RunConfig& c,
                      const std::vector<eval::TaskResult>& results) {
  ordered_json j;
  j["tasks"] = results.size();
  std::size_t samples = 0;
  for (const auto& r : results) samples += r.samples.size();
  j["samples"] = samples;
  ordered_json q = ordered_json::object();
  if (!results.empty()) {
    for (const auto& [cat, s] : eval::aggregate_quality(results)) {
      q[cat] = {{"tasks", s.tasks},
                {"mean", s.mean_of_means},
                {"max", s.mean_of_maxes},
                {"min", s.mean_of_mins}};
    }
  }
  j["quality"] = q;
  ordered_json pk = ordered_json::object();
  for (int k : c.eval.k) {
    double v = eval::mean_pass_at_k(results, k);
    pk[std::to_string(k)] = v < 0.0 ? ordered_json(nullptr) : ordered_json(v);
  }
  j["pass_at_k"] = pk;
  ordered_json per_task = ordered_json::array();
  for (const auto& r : results) {
    double sum = 0.0;
    int passed = 0;
    for (const auto& s : r.samples) {
      sum += s.quality;
      passed += s.passed_all_tests ? 1 : 0;
    }
    per_task.push_back({{"task_id", r.task_id},
                        {"category", r.category},
                        {"mean_quality", r.samples.empty()
                                             ? 0.0
                                             : sum / r.samples.size()},
                        {"passed", passed},
                        {"samples", r.samples.size()}});
  }
  j["per_task"] = per_task;
  return j;
}

std::vector<std::string> quality_header() {
  return {"arm", "category", "tasks", "mean", "max", "min"};
}

std::vector<std::vector<std::string>> quality_rows(const ordered_json& arms) {
  std::vector<std::vector<std::string>> rows;
  for (auto it = arms.begin(); it != arms.end(); ++it) {
    for (auto q = it.value()["quality"].begin();
         q != it.value()["quality"].end(); ++q) {
      rows.push_back({it.key(), q.key(),
                      std::to_string(q.value()["tasks"].get<int>()),
                      fmt(q.value()["mean"].get<double>()),
                      fmt(q.value()["max"].get<double>()),
                      fmt(q.value()["min"].get<double>())});
    }
  }
  return rows;
}

std::vector<std::string> issue_header() {
  return {"check", "category", "baseline", "optimized", "change",
          "baseline_avg", "optimized_avg"};
}

std::vector<std::vector<std::string>> issue_rows(const ordered_json& issues) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& d : issues) {
    rows.push_back({d["check_id"].get<std::string>(),
                    d["category"].get<std::string>(),
                    std::to_string(d["baseline_count"].get<int>()),
                    std::to_string(d["optimized_count"].get<int>()),
                    std::to_string(d["change"].get<int>()),
                    fmt(d["baseline_avg_score"].get<double>()),
                    fmt(d["optimized_avg_score"].get<double>())});
  }
  return rows;
}

int cmd_evaluate(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const fs::path mpath = manifest_path(c);
  require_file(mpath, "task manifest");
  auto task_list = tasks::load_manifest(mpath);
  ArmSamples primary = read_arm(c.samples_path());
  std::optional<ArmSamples> baseline;
  if (!c.paths.baseline_samples.empty()) {
    baseline = read_arm(c.paths.baseline_samples);
  }
  DirLock lock(c.paths.out_dir);

  ordered_json errors = ordered_json::object();
  auto score_arm = [&](const ArmSamples& arm, const std::string& name) {
    std::vector<const tasks::TaskSpec*> present;
    for (const auto& t : task_list) {
      auto it = arm.sources.find(t.task_id);
      if (it == arm.sources.end() || it->second.empty()) {
        errors[name + ":" + t.task_id] = "no samples for task";
        continue;
      }
      present.push_back(&t);
    }
    std::vector<eval::TaskResult> results(present.size());
    parallel_for(present.size(), c.workers, [&](std::size_t i) {
      results[i] = score_samples(c, *present[i],
                                 arm.sources.at(present[i]->task_id), true);
    });
    return results;
  };
  auto primary_results = score_arm(primary, "optimized");
  ordered_json doc;
  ordered_json arms;
  std::optional<std::vector<eval::TaskResult>> base_results;
  if (baseline) {
    base_results = score_arm(*baseline, "baseline");
    arms["baseline"] = arm_json(c, *base_results);
  }
  arms[baseline ? "optimized" : "samples"] = arm_json(c, primary_results);
  doc["arms"] = arms;
  if (base_results) {
    // Compare only tasks scored on both sides.
    std::map<std::string, const eval::TaskResult*> by_id;
    for (const auto& r : *base_results) by_id[r.task_id] = &r;
    std::vector<eval::TaskResult> b, o;
    for (const auto& r : primary_results) {
      auto it = by_id.find(r.task_id);
      if (it == by_id.end()) continue;
      o.push_back(r);
      b.push_back(*it->second);
    }
    ordered_json issues = ordered_json::array();
    for (const auto& d : eval::issue_frequency_report(b, o, c.eval.issue_cap)) {
      issues.push_back({{"check_id", d.check_id},
                        {"category", std::string(1, d.category)},
                        {"baseline_count", d.baseline_count},
                        {"optimized_count", d.optimized_count},
                        {"change", d.change},
                        {"baseline_avg_score", d.baseline_avg_score},
                        {"optimized_avg_score", d.optimized_avg_score}});
    }
    doc["issues"] = issues;
  }
  doc["errors"] = errors;
  for (auto it = errors.begin(); it != errors.end(); ++it) {
    err << "cpt evaluate: " << it.key() << ": "
        << it.value().get<std::string>() << "\n";
  }

  const fs::path rdir = c.reports_path();
  fs::create_directories(rdir);
  const std::string text = render_evaluation_text(doc);
  checkpoint::write_file_atomic(rdir / "evaluation.json", doc.dump(1) + "\n");
  checkpoint::write_file_atomic(rdir / "evaluation.txt", text);
  if (c.eval.csv) {
    checkpoint::write_file_atomic(
        rdir / "quality.csv",
        eval::render_csv(quality_header(), quality_rows(doc["arms"])));
    if (doc.contains("issues")) {
      checkpoint::write_file_atomic(
          rdir / "issues.csv",
          eval::render_csv(issue_header(), issue_rows(doc["issues"])));
    }
  }
  out << text;
  return kExitOk;
}

int cmd_report(const RunConfig& c, std::ostream& out) {
  const fs::path p = c.reports_path() / "evaluation.json";
  require_file(p, "evaluation results");
  ordered_json doc;
  try {
    doc = ordered_json::parse(checkpoint::read_file(p));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed evaluation results: " +
                      std::string(e.what()));
  }
  out << render_evaluation_text(doc);
  return kExitOk;
}

}  // namespace

std::string render_evaluation_text(const ordered_json& doc) {
  std::ostringstream os;
  os << "Quality (mean / max / min per task, averaged by category)\n";
  os << eval::render_table(quality_header(), quality_rows(doc["arms"]));
  os << "\npass@k\n";
  std::vector<std::string> header{"arm"};
  std::vector<std::string> ks;
  for (auto it = doc["arms"].begin(); it != doc["arms"].end(); ++it) {
    for (auto k = it.value()["pass_at_k"].begin();
         k != it.value()["pass_at_k"].end(); ++k) {
      if (std::find(ks.begin(), ks.end(), k.key()) == ks.end()) {
        ks.push_back(k.key());
      }
    }
  }
  for (const auto& k : ks) header.push_back("pass@" + k);
  std::vector<std::vector<std::string>> rows;
  for (auto it = doc["arms"].begin(); it != doc["arms"].end(); ++it) {
    std::vector<std::string> row{it.key()};
    for (const auto& k : ks) {
      const auto& v = it.value()["pass_at_k"][k];
      row.push_back(v.is_number() ? fmt(v.get<double>(), 4) : "n/a");
    }
    rows.push_back(row);
  }
  os << eval::render_table(header, rows);
  if (doc.contains("issues")) {
    os << "\nIssue frequency (baseline vs optimized)\n";
    os << eval::render_table(issue_header(), issue_rows(doc["issues"]));
  }
  return os.str();
}

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Comparative prefix-tuning pipeline for code quality"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  bool skip_basic = false;
  bool no_prefix = false;
  std::string out_dir;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--seed", seed, "Global seed");
  app.add_option("--workers", workers, "Worker threads for per-task work");
  app.add_flag("--skip-basic", skip_basic, "Skip the basic tuning stage");
  app.add_flag("--no-prefix", no_prefix, "Generate from the base model only");
  app.add_option("--out", out_dir, "Output directory (paths.out_dir)");
  app.add_option("--set", overrides, "Override a config field: section.key=value");

  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic task set");
  auto* pretrain_cmd =
      app.add_subcommand("pretrain", "Train the base model on a corpus");
  auto* analyze_cmd = app.add_subcommand("analyze", "Score source files");
  std::vector<std::string> files;
  bool verbose = false;
  analyze_cmd->add_option("files", files, "Source files")->required();
  analyze_cmd->add_flag("-v,--verbose", verbose, "List issues");
  auto* build_cmd =
      app.add_subcommand("build-dataset", "Build the comparative pair dataset");
  auto* train_cmd = app.add_subcommand("train", "Train the prefix");
  auto* generate_cmd =
      app.add_subcommand("generate", "Sample solutions for every task");
  auto* evaluate_cmd =
      app.add_subcommand("evaluate", "Score samples and write reports");
  std::string baseline_dir;
  evaluate_cmd->add_option("--baseline", baseline_dir,
                           "Baseline sample directory (two-arm mode)");
  auto* report_cmd =
      app.add_subcommand("report", "Print tables from evaluation results");
  std::string manifest, samples;
  for (auto* sub : {build_cmd, generate_cmd, evaluate_cmd}) {
    sub->add_option("--manifest", manifest, "Task manifest");
    sub->add_option("--samples", samples, "Sample directory");
  }
  std::string corpus;
  pretrain_cmd->add_option("--corpus", corpus, "Pretraining corpus (JSONL)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  RunConfig config;
  try {
    if (!config_path.empty()) config = load_run_config(config_path);
    for (const auto& o : overrides) apply_override(config, o);
    if (seed) config.seed = *seed;
    if (workers) config.workers = *workers;
    if (skip_basic) config.skip_basic = true;
    if (no_prefix) config.no_prefix = true;
    if (!out_dir.empty()) config.paths.out_dir = out_dir;
    if (!manifest.empty()) config.paths.manifest = manifest;
    if (!samples.empty()) config.paths.samples = samples;
    if (!baseline_dir.empty()) config.paths.baseline_samples = baseline_dir;
    if (!corpus.empty()) config.paths.corpus = corpus;
    config.validate();

    if (*synth_cmd) return cmd_synth(config, out);
    if (*pretrain_cmd) return cmd_pretrain(config, out);
    if (*analyze_cmd) return cmd_analyze(config, files, verbose, out, err);
    if (*build_cmd) return cmd_build_dataset(config, out, err);
    if (*train_cmd) return cmd_train(config, out, err);
    if (*generate_cmd) return cmd_generate(config, out);
    if (*evaluate_cmd) return cmd_evaluate(config, out, err);
    if (*report_cmd) return cmd_report(config, out);
  } catch (const NumericError& e) {
    err << "cpt: numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    err << "cpt: " << e.what() << "\n";
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    err << "cpt: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace cpt::cli
