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

#include "cpt_cli/run_config.hpp"

#include "cpt/checkpoint.hpp"
#include "cpt/errors.hpp"
#include "cpt/random.hpp"

namespace cpt::cli {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

const char* kl_scope_name(train::KlScope s) {
  return s == train::KlScope::kBoth ? "both" : "a_only";
}

train::KlScope kl_scope_from(const std::string& s) {
  if (s == "a_only") return train::KlScope::kAOnly;
  if (s == "both") return train::KlScope::kBoth;
  throw ParameterError("train.kl_over must be \"a_only\" or \"both\", got \"" +
                       s + "\"");
}

std::string diff_tokens_name(pairs::DiffTokens d) {
  return d == pairs::DiffTokens::kModel ? "model" : "lexical";
}

pairs::DiffTokens diff_tokens_from(const std::string& s) {
  if (s == "model") return pairs::DiffTokens::kModel;
  if (s == "lexical") return pairs::DiffTokens::kLexical;
  throw ParameterError(
      "pipeline.diff_tokens must be \"model\" or \"lexical\", got \"" + s +
      "\"");
}

fs::path or_default(const fs::path& p, const fs::path& fallback) {
  return p.empty() ? fallback : p;
}

// Overlays `user` onto `base`, refusing keys that `base` does not define.
void merge_strict(ordered_json& base, const json& user,
                  const std::string& where) {
  if (!user.is_object()) {
    throw ParameterError(where.empty() ? "config must be a JSON object"
                                       : where + " must be an object");
  }
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = where.empty() ? it.key() : where + "." + it.key();
    if (!base.contains(it.key())) {
      throw ParameterError("unknown config key " + key);
    }
    auto& slot = base[it.key()];
    if (slot.is_object()) {
      merge_strict(slot, it.value(), key);
    } else {
      slot = it.value();
    }
  }
}

}  // namespace

ordered_json RunConfig::to_json() const {
  ordered_json j;
  j["paths"] = {{"out_dir", paths.out_dir.string()},
                {"manifest", paths.manifest.string()},
                {"corpus", paths.corpus.string()},
                {"base", paths.base.string()},
                {"prefix", paths.prefix.string()},
                {"dataset", paths.dataset.string()},
                {"samples", paths.samples.string()},
                {"baseline_samples", paths.baseline_samples.string()},
                {"candidates", paths.candidates.string()},
                {"reports", paths.reports.string()}};
  j["model"] = {{"layers", model.layers},   {"hidden", model.hidden},
                {"heads", model.heads},     {"vocab", model.vocab},
                {"max_context", model.max_context}, {"ffn", model.ffn}};
  j["pipeline"] = {{"n_samples_per_task", pipeline.n_samples_per_task},
                   {"delta_min", pipeline.delta_min},
                   {"similarity_min", pipeline.similarity_min},
                   {"beta1", pipeline.beta1},
                   {"beta2", pipeline.beta2},
                   {"max_pairs_per_task", pipeline.max_pairs_per_task},
                   {"test_timeout_seconds", pipeline.test_timeout_seconds},
                   {"diff_tokens", diff_tokens_name(pipeline.diff_tokens)}};
  ordered_json t = {{"learning_rate", train.learning_rate},
                    {"epochs", train.epochs},
                    {"clip_norm", train.clip_norm},
                    {"batch_size", train.batch_size},
                    {"kl_over", kl_scope_name(train.kl_over)},
                    {"beta1", train.adam.beta1},
                    {"beta2", train.adam.beta2},
                    {"eps", train.adam.eps},
                    {"weight_decay", train.adam.weight_decay}};
  t["basic_learning_rate"] = basic_learning_rate
                                 ? ordered_json(*basic_learning_rate)
                                 : ordered_json(nullptr);
  t["basic_epochs"] =
      basic_epochs ? ordered_json(*basic_epochs) : ordered_json(nullptr);
  t["skip_basic"] = skip_basic;
  j["train"] = t;
  j["weights"] = {{"lm", weights.lm}, {"rank", weights.rank},
                  {"kl", weights.kl}};
  j["generation"] = {{"temperature", generation.temperature},
                     {"top_p", generation.top_p},
                     {"max_new_tokens", generation.max_new_tokens},
                     {"n_samples", generation.n_samples}};
  j["analyzer"] = {
      {"kind", analyzer_kind == AnalyzerKind::kMock ? "mock" : "external"},
      {"executable", analyzer.executable},
      {"args", analyzer.args},
      {"timeout_seconds", analyzer.timeout_seconds},
      {"max_ok_exit", analyzer.max_ok_exit},
      {"exclude_ids", analyzer.filter.excluded_ids},
      {"exclude_name_patterns", analyzer.filter.excluded_name_patterns}};
  j["pretrain"] = {{"learning_rate", pretrain.learning_rate},
                   {"epochs", pretrain.epochs},
                   {"init_scale", pretrain.init_scale},
                   {"max_vocab", pretrain.max_vocab}};
  j["prefix"] = {{"length", prefix.length},
                 {"dim", prefix.dim},
                 {"init_scale", prefix.init_scale}};
  j["evaluate"] = {{"k", eval.k},
                   {"issue_cap", eval.issue_cap},
                   {"csv", eval.csv}};
  j["synth"] = {{"tasks", synth.tasks},
                {"heldout", synth.heldout},
                {"variants", synth.variants}};
  j["seed"] = seed;
  j["workers"] = workers;
  j["no_prefix"] = no_prefix;
  return j;
}

RunConfig RunConfig::from_json(const json& user) {
  ordered_json j = RunConfig{}.to_json();
  merge_strict(j, user, "");
  RunConfig c;
  try {
    const auto& p = j.at("paths");
    c.paths.out_dir = p.at("out_dir").get<std::string>();
    c.paths.manifest = p.at("manifest").get<std::string>();
    c.paths.corpus = p.at("corpus").get<std::string>();
    c.paths.base = p.at("base").get<std::string>();
    c.paths.prefix = p.at("prefix").get<std::string>();
    c.paths.dataset = p.at("dataset").get<std::string>();
    c.paths.samples = p.at("samples").get<std::string>();
    c.paths.baseline_samples = p.at("baseline_samples").get<std::string>();
    c.paths.candidates = p.at("candidates").get<std::string>();
    c.paths.reports = p.at("reports").get<std::string>();

    const auto& m = j.at("model");
    c.model.layers = m.at("layers").get<int>();
    c.model.hidden = m.at("hidden").get<int>();
    c.model.heads = m.at("heads").get<int>();
    c.model.vocab = m.at("vocab").get<int>();
    c.model.max_context = m.at("max_context").get<int>();
    c.model.ffn = m.at("ffn").get<int>();

    const auto& pl = j.at("pipeline");
    c.pipeline.n_samples_per_task = pl.at("n_samples_per_task").get<int>();
    c.pipeline.delta_min = pl.at("delta_min").get<double>();
    c.pipeline.similarity_min = pl.at("similarity_min").get<double>();
    c.pipeline.beta1 = pl.at("beta1").get<double>();
    c.pipeline.beta2 = pl.at("beta2").get<double>();
    c.pipeline.max_pairs_per_task = pl.at("max_pairs_per_task").get<int>();
    c.pipeline.test_timeout_seconds =
        pl.at("test_timeout_seconds").get<double>();
    c.pipeline.diff_tokens =
        diff_tokens_from(pl.at("diff_tokens").get<std::string>());

    const auto& t = j.at("train");
    c.train.learning_rate = t.at("learning_rate").get<double>();
    c.train.epochs = t.at("epochs").get<int>();
    c.train.clip_norm = t.at("clip_norm").get<double>();
    c.train.batch_size = t.at("batch_size").get<int>();
    c.train.kl_over = kl_scope_from(t.at("kl_over").get<std::string>());
    c.train.adam.beta1 = t.at("beta1").get<double>();
    c.train.adam.beta2 = t.at("beta2").get<double>();
    c.train.adam.eps = t.at("eps").get<double>();
    c.train.adam.weight_decay = t.at("weight_decay").get<double>();
    if (!t.at("basic_learning_rate").is_null()) {
      c.basic_learning_rate = t.at("basic_learning_rate").get<double>();
    }
    if (!t.at("basic_epochs").is_null()) {
      c.basic_epochs = t.at("basic_epochs").get<int>();
    }
    c.skip_basic = t.at("skip_basic").get<bool>();

    const auto& w = j.at("weights");
    c.weights.lm = w.at("lm").get<double>();
    c.weights.rank = w.at("rank").get<double>();
    c.weights.kl = w.at("kl").get<double>();

    const auto& g = j.at("generation");
    c.generation.temperature = g.at("temperature").get<double>();
    c.generation.top_p = g.at("top_p").get<double>();
    c.generation.max_new_tokens = g.at("max_new_tokens").get<int>();
    c.generation.n_samples = g.at("n_samples").get<int>();

    const auto& a = j.at("analyzer");
    const auto kind = a.at("kind").get<std::string>();
    if (kind == "mock") {
      c.analyzer_kind = AnalyzerKind::kMock;
    } else if (kind == "external") {
      c.analyzer_kind = AnalyzerKind::kExternal;
    } else {
      throw ParameterError("analyzer.kind must be \"mock\" or \"external\"");
    }
    c.analyzer.executable = a.at("executable").get<std::string>();
    c.analyzer.args = a.at("args").get<std::vector<std::string>>();
    c.analyzer.timeout_seconds = a.at("timeout_seconds").get<double>();
    c.analyzer.max_ok_exit = a.at("max_ok_exit").get<int>();
    c.analyzer.filter.excluded_ids =
        a.at("exclude_ids").get<std::set<std::string>>();
    c.analyzer.filter.excluded_name_patterns =
        a.at("exclude_name_patterns").get<std::vector<std::string>>();

    const auto& pr = j.at("pretrain");
    c.pretrain.learning_rate = pr.at("learning_rate").get<double>();
    c.pretrain.epochs = pr.at("epochs").get<int>();
    c.pretrain.init_scale = pr.at("init_scale").get<double>();
    c.pretrain.max_vocab = pr.at("max_vocab").get<int>();

    const auto& px = j.at("prefix");
    c.prefix.length = px.at("length").get<int>();
    c.prefix.dim = px.at("dim").get<int>();
    c.prefix.init_scale = px.at("init_scale").get<double>();

    const auto& e = j.at("evaluate");
    c.eval.k = e.at("k").get<std::vector<int>>();
    c.eval.issue_cap = e.at("issue_cap").get<int>();
    c.eval.csv = e.at("csv").get<bool>();

    const auto& s = j.at("synth");
    c.synth.tasks = s.at("tasks").get<int>();
    c.synth.heldout = s.at("heldout").get<int>();
    c.synth.variants = s.at("variants").get<int>();

    c.seed = j.at("seed").get<std::uint64_t>();
    c.workers = j.at("workers").get<int>();
    c.no_prefix = j.at("no_prefix").get<bool>();
  } catch (const nlohmann::json::exception& ex) {
    throw ParameterError(std::string("invalid config value: ") + ex.what());
  }
  return c;
}

void RunConfig::validate() const {
  model.validate();
  pipeline.validate();
  train.validate();
  if (!(train.learning_rate > 0.0)) {
    throw ParameterError("train.learning_rate must be > 0");
  }
  if (basic_learning_rate && !(*basic_learning_rate > 0.0)) {
    throw ParameterError("train.basic_learning_rate must be > 0");
  }
  if (basic_epochs && *basic_epochs < 0) {
    throw ParameterError("train.basic_epochs must be >= 0");
  }
  weights.validate();
  if (!(generation.temperature > 0.0)) {
    throw ParameterError("generation.temperature must be > 0");
  }
  if (!(generation.top_p > 0.0 && generation.top_p <= 1.0)) {
    throw ParameterError("generation.top_p must lie in (0, 1]");
  }
  if (generation.max_new_tokens < 1 || generation.n_samples < 1) {
    throw ParameterError(
        "generation.max_new_tokens and generation.n_samples must be >= 1");
  }
  if (analyzer_kind == AnalyzerKind::kExternal &&
      analyzer.executable.empty()) {
    throw ParameterError("analyzer.executable is required for kind external");
  }
  if (!(analyzer.timeout_seconds > 0.0)) {
    throw ParameterError("analyzer.timeout_seconds must be > 0");
  }
  if (!(pretrain.learning_rate > 0.0) || pretrain.epochs < 0 ||
      pretrain.max_vocab < 5) {
    throw ParameterError("invalid pretrain settings");
  }
  if (prefix.length < 1 || prefix.dim < 0) {
    throw ParameterError("prefix.length must be >= 1 and prefix.dim >= 0");
  }
  if (eval.k.empty() || eval.issue_cap < 1) {
    throw ParameterError("evaluate.k must be non-empty, issue_cap >= 1");
  }
  for (int k : eval.k) {
    if (k < 1) throw ParameterError("evaluate.k entries must be >= 1");
  }
  if (synth.tasks < 1 || synth.heldout < 0 || synth.heldout >= synth.tasks ||
      synth.variants < 2) {
    throw ParameterError("invalid synth settings");
  }
  if (workers < 1) throw ParameterError("workers must be >= 1");
}

fs::path RunConfig::base_path() const {
  return or_default(paths.base, paths.out_dir / "base.ckpt");
}
fs::path RunConfig::prefix_path() const {
  return or_default(paths.prefix, paths.out_dir / "prefix.ckpt");
}
fs::path RunConfig::dataset_path() const {
  return or_default(paths.dataset, paths.out_dir / "dataset.jsonl");
}
fs::path RunConfig::samples_path() const {
  return or_default(paths.samples,
                    paths.out_dir / (no_prefix ? "samples_base" : "samples"));
}
fs::path RunConfig::reports_path() const {
  return or_default(paths.reports, paths.out_dir / "reports");
}
fs::path RunConfig::train_state_path() const {
  return paths.out_dir / "train_state.ckpt";
}
fs::path RunConfig::train_log_path() const {
  return paths.out_dir / "train_log.jsonl";
}

train::TrainConfig RunConfig::basic_config() const {
  train::TrainConfig c = train;
  if (basic_learning_rate) c.learning_rate = *basic_learning_rate;
  if (basic_epochs) c.epochs = *basic_epochs;
  return c;
}

std::uint64_t RunConfig::stream_seed(std::uint64_t stream) const {
  return derive_seed(seed, stream);
}

RunConfig load_run_config(const fs::path& path) {
  std::string text;
  try {
    text = checkpoint::read_file(path);
  } catch (const Error&) {
    throw ParameterError("cannot read config file " + path.string());
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError("config file " + path.string() +
                         " is not valid JSON: " + e.what());
  }
  return RunConfig::from_json(j);
}

void apply_override(RunConfig& config, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ParameterError("override must look like section.key=value: " +
                         assignment);
  }
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const nlohmann::json::exception&) {
    value = raw;
  }
  json patch = json::object();
  json* cursor = &patch;
  std::size_t start = 0;
  while (true) {
    auto dot = path.find('.', start);
    std::string part = path.substr(start, dot - start);
    if (part.empty()) throw ParameterError("bad override key " + path);
    if (dot == std::string::npos) {
      (*cursor)[part] = value;
      break;
    }
    cursor = &(*cursor)[part];
    start = dot + 1;
  }
  ordered_json current = config.to_json();
  merge_strict(current, patch, "");
  config = RunConfig::from_json(current);
}

}  // namespace cpt::cli
