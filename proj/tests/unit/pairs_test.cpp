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

#include <algorithm>
#include <filesystem>
#include <map>
#include <random>

#include "cpt/errors.hpp"
#include "cpt/pairs.hpp"
#include "cpt/synth.hpp"
#include "cpt/tasks.hpp"
#include "cpt/vocab.hpp"
#include "doctest.h"

using namespace cpt;
using namespace cpt::pairs;

namespace {

Candidate cand(std::string id, double q, std::vector<std::string> toks,
               int passes = 0) {
  Candidate c;
  c.candidate_id = std::move(id);
  c.quality = q;
  c.tokens = lexdiff::TokenSeq::from_texts(toks);
  c.test_passes = passes;
  return c;
}

std::vector<std::string> repeat(const std::string& t, int n) {
  return std::vector<std::string>(n, t);
}

std::vector<std::string> concat(std::vector<std::string> a,
                                const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

ScoredPair scored(const Candidate& a, const Candidate& b, double combined) {
  ScoredPair p{&a, &b, {}};
  p.score.combined = combined;
  return p;
}

tasks::TaskSpec task(std::string id) {
  tasks::TaskSpec t;
  t.task_id = std::move(id);
  t.instruction = "write f";
  t.tests = {{"true", true}};
  return t;
}

}  // namespace

TEST_CASE("filter and dedup") {
  std::vector<Candidate> c{cand("a", 0.0, {"x"}), cand("b", 2.5, {"y"}),
                           cand("c", 10.0, {"z"})};
  auto kept = filter_candidates(c);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].candidate_id == "b");
  CHECK(kept[1].candidate_id == "c");
  CHECK(filter_candidates({cand("a", 0.0, {"x"}), cand("b", 0.0, {"y"})}).empty());
  std::vector<Candidate> pos{cand("a", 1.0, {"x"}), cand("b", 3.0, {"y"})};
  CHECK(filter_candidates(pos).size() == 2);

  std::vector<Candidate> dup{cand("a", 1, {"x", "y"}), cand("b", 2, {"x", "y"}),
                             cand("c", 3, {"y"})};
  auto d = dedup_candidates(dup);
  REQUIRE(d.size() == 2);
  CHECK(d[0].candidate_id == "a");
  CHECK(d[1].candidate_id == "c");
}

TEST_CASE("pair scoring") {
  PipelineConfig cfg;
  // Count vectors (3, 4) and (1, 0): cosine 3/5.
  auto a = cand("a", 8.0, concat(repeat("x", 3), repeat("y", 4)));
  auto b = cand("b", 5.0, {"x"});
  auto r = score_pair(a, b, cfg);
  CHECK(r.accepted());
  CHECK(r.score.delta == 3.0);
  CHECK(r.score.similarity == 0.6);
  CHECK(std::abs(r.score.combined - 0.39) < 1e-12);

  auto close = score_pair(cand("a", 5.5, {"x"}), cand("b", 5.0, {"x", "x"}), cfg);
  CHECK(close.rejection == Rejection::kDelta);
  auto edge = score_pair(cand("a", 6.0, {"x"}), cand("b", 5.0, {"x", "x"}), cfg);
  CHECK(edge.rejection == Rejection::kDelta);

  // Cosine 1/5 < 0.4.
  auto far = score_pair(cand("a", 9.0, concat(repeat("p", 4), repeat("q", 3))),
                        cand("b", 4.0, {"q", "r", "r", "r", "r", "r", "r", "r",
                                        "r", "r", "r", "r", "r", "r", "r", "r"}),
                        cfg);
  CHECK(far.rejection == Rejection::kSimilarity);

  std::mt19937_64 rng(2);
  for (int i = 0; i < 200; ++i) {
    auto x = cand("x", (rng() % 100) / 10.0 + 0.1, {"a", rng() % 2 ? "b" : "c"});
    auto y = cand("y", (rng() % 100) / 10.0 + 0.1, {"a", "b", rng() % 2 ? "d" : "a"});
    auto s = score_pair(x, y, cfg).score;
    CHECK(s.combined >= 0.0);
    CHECK(s.combined <= 1.0);
  }
}

TEST_CASE("pair selection") {
  auto a = cand("a", 9, {"x"}, 0), b = cand("b", 5, {"x"}, 1),
       c = cand("c", 7, {"x"}, 1), d = cand("d", 2, {"x"}, 1);
  std::vector<ScoredPair> list{scored(a, b, 0.5), scored(c, d, 0.4),
                               scored(a, d, 0.3)};
  auto pick = select_pair(list);
  REQUIRE(pick);
  CHECK(pick->a == &c);
  CHECK(pick->score.combined == 0.4);

  auto e = cand("e", 9, {"x"}, 0), f = cand("f", 1, {"x"}, 0);
  std::vector<ScoredPair> none{scored(e, b, 0.4), scored(e, f, 0.5),
                               scored(f, d, 0.3)};
  auto fallback = select_pair(none);
  REQUIRE(fallback);
  CHECK(fallback->score.combined == 0.5);
  CHECK_FALSE(select_pair({}).has_value());

  // Ties resolved by the sorted id pair, regardless of input order.
  std::vector<ScoredPair> ties{scored(d, c, 0.4), scored(b, c, 0.4),
                               scored(b, d, 0.4), scored(a, b, 0.2)};
  std::mt19937_64 rng(1);
  for (int i = 0; i < 24; ++i) {
    std::shuffle(ties.begin(), ties.end(), rng);
    auto p = select_pair(ties);
    REQUIRE(p);
    CHECK(((p->a == &b && p->b == &c) || (p->a == &c && p->b == &b)));
  }

  auto two = select_pairs({scored(c, d, 0.4), scored(b, c, 0.45), scored(a, b, 0.9)}, 2);
  REQUIRE(two.size() == 2);
  CHECK(two[0].score.combined == 0.45);
  CHECK(two[1].score.combined == 0.4);
}

TEST_CASE("instance orientation and masks") {
  auto hi = cand("h", 7, {"a", "b", "c", "d"});
  auto lo = cand("l", 3, {"b", "c", "d", "e"});
  PairScore s;
  s.similarity = 0.75;
  auto x = build_instance("t", "do it", hi, lo, s);
  auto y = build_instance("t", "do it", lo, hi, s);
  CHECK(x.a_candidate == "h");
  CHECK(x.a_score == 7);
  CHECK(x.b_score == 3);
  CHECK(x.a_mask == lexdiff::MaskVector{1, 0, 0, 0});
  CHECK(x.b_mask == lexdiff::MaskVector{0, 0, 0, 1});
  CHECK(instance_to_json(x) == instance_to_json(y));

  auto twin = cand("w", 5, {"a", "b"});
  auto twin2 = cand("v", 4, {"a", "b"});
  auto z = build_instance("t", "i", twin, twin2, s);
  CHECK(std::count(z.a_mask.begin(), z.a_mask.end(), 1) == 0);
  CHECK_THROWS_AS(build_instance("t", "i", twin, cand("q", 5, {"z"}), s),
                  OrientationError);
}

TEST_CASE("instances serialize losslessly") {
  auto hi = cand("h", 7.25, {"def", "f", "<nl>"});
  auto lo = cand("l", 3.5, {"def", "g", "<nl>"});
  PairScore s{3.75, 0.375, 0.6666666666666666, 0.4625};
  auto inst = build_instance("t1", "write \"f\"", hi, lo, s);
  auto back = instance_from_json(instance_to_json(inst));
  CHECK(instance_to_json(back) == instance_to_json(inst));
  CHECK(back.a_tokens.texts() == inst.a_tokens.texts());
  CHECK(back.similarity == inst.similarity);

  auto dir = std::filesystem::temp_directory_path() / "cpt_pairs_test";
  std::filesystem::create_directories(dir);
  save_dataset(dir / "d.jsonl", {inst, inst});
  auto loaded = load_dataset(dir / "d.jsonl");
  CHECK(loaded.size() == 2);
  CHECK(serialize_dataset(loaded) == serialize_dataset({inst, inst}));
  std::filesystem::remove_all(dir);

  Vocabulary vocab(std::vector<std::string>{"<unk>", "<bos>", "<sep>", "<eos>",
                                            "def", "f", "g", "<nl>", "write"});
  auto ex = to_training_example(inst, vocab);
  CHECK(ex.a_ids == std::vector<int>{4, 5, 7, 3});
  CHECK(ex.a_mask.size() == ex.a_ids.size());
  CHECK(ex.a_mask.back() == 0);
  CHECK(ex.b_ids.back() == Vocabulary::kEos);
}

TEST_CASE("dataset building") {
  // Sources keyed by task: each entry is (id, source, quality, passes).
  struct Src {
    std::string id, source;
    double q;
    int passes;
  };
  std::map<std::string, std::vector<Src>> table{
      {"all_zero", {{"c0", "x = 1\n", 0.0, 1}, {"c1", "y = 2\n", 0.0, 1}}},
      {"one_pair",
       {{"c0", "def f(a):\n    return a\n", 9.0, 1},
        {"c1", "def f(a):\n    return (a)\n", 5.0, 1}}},
      {"dups",
       {{"c0", "x = 1\n", 6.0, 1}, {"c1", "x = 1\n", 2.0, 1},
        {"c2", "x = 'unterminated\n", 8.0, 1}}},
      {"too_close",
       {{"c0", "x = 1\n", 6.0, 1}, {"c1", "x = 2\n", 5.5, 1}}},
  };
  DatasetHooks hooks;
  hooks.candidates = [&](const tasks::TaskSpec& t) {
    std::vector<RawCandidate> out;
    for (const auto& s : table.at(t.task_id)) out.push_back({s.id, s.source});
    return out;
  };
  hooks.evaluate = [&](const tasks::TaskSpec& t, const RawCandidate& r) {
    for (const auto& s : table.at(t.task_id)) {
      if (s.id == r.candidate_id) return CandidateEvaluation{s.q, s.passes};
    }
    return CandidateEvaluation{};
  };
  std::vector<tasks::TaskSpec> ts{task("all_zero"), task("one_pair"),
                                  task("dups"), task("too_close")};
  PipelineConfig cfg;
  auto res = build_dataset(ts, hooks, cfg);
  REQUIRE(res.instances.size() == 1);
  CHECK(res.instances[0].task_id == "one_pair");
  CHECK(res.instances[0].a_candidate == "c0");
  CHECK(res.stats.tasks_attempted == 4);
  CHECK(res.stats.tasks_with_pairs == 1);
  CHECK(res.stats.tasks_filtered == 2);
  CHECK(res.stats.tasks_no_valid_pair == 1);
  CHECK(res.stats.duplicates_removed == 1);
  CHECK(res.stats.pairs_rejected_delta == 1);

  for (const auto& inst : res.instances) {
    CHECK(inst.a_score - inst.b_score >= cfg.delta_min);
    CHECK(inst.similarity > cfg.similarity_min);
    CHECK(inst.b_score > 0.0);
  }

  hooks.workers = 3;
  auto parallel = build_dataset(ts, hooks, cfg);
  CHECK(serialize_dataset(parallel.instances) == serialize_dataset(res.instances));
  CHECK(stats_to_json(parallel.stats) == stats_to_json(res.stats));

  auto empty = build_dataset({}, hooks, cfg);
  CHECK(empty.instances.empty());
}

TEST_CASE("mask token stream is selectable") {
  // Brackets are out of vocabulary, so both variants encode identically.
  DatasetHooks hooks;
  hooks.candidates = [](const tasks::TaskSpec&) {
    return std::vector<RawCandidate>{{"c0", "x = (1)\n"}, {"c1", "x = [1]\n"}};
  };
  hooks.evaluate = [](const tasks::TaskSpec&, const RawCandidate& r) {
    return CandidateEvaluation{r.candidate_id == "c0" ? 9.0 : 4.0, 1};
  };
  Vocabulary vocab(std::vector<std::string>{"<unk>", "<bos>", "<sep>", "<eos>",
                                            "x", "=", "1", "<nl>"});
  hooks.vocab = &vocab;
  PipelineConfig cfg;
  auto by_model = build_dataset({task("t")}, hooks, cfg);
  cfg.diff_tokens = DiffTokens::kLexical;
  auto by_text = build_dataset({task("t")}, hooks, cfg);
  REQUIRE(by_model.instances.size() == 1);
  REQUIRE(by_text.instances.size() == 1);
  CHECK(by_model.instances[0].a_mask == lexdiff::MaskVector{0, 0, 0, 0, 0, 0});
  CHECK(by_text.instances[0].a_mask == lexdiff::MaskVector{0, 0, 1, 0, 1, 0});
  CHECK(by_text.instances[0].b_mask == lexdiff::MaskVector{0, 0, 1, 0, 1, 0});
}

TEST_CASE("task manifests and test execution") {
  tasks::TaskSpec t;
  t.task_id = "t0";
  t.instruction = "write f";
  t.category = "interview";
  t.tests = {{"grep -q 'def f' {file}", false}, {"grep -q return {file}", true},
             {"false", false}};
  CHECK(t.essential_indices() == std::vector<std::size_t>{1});
  tasks::TaskSpec plain = t;
  for (auto& c : plain.tests) c.essential = false;
  CHECK(plain.essential_indices() == std::vector<std::size_t>{0});

  auto dir = std::filesystem::temp_directory_path() / "cpt_tasks_test";
  std::filesystem::create_directories(dir);
  tasks::save_manifest(dir / "m.json", {t, plain});
  auto back = tasks::load_manifest(dir / "m.json");
  CHECK(tasks::serialize_manifest(back) == tasks::serialize_manifest({t, plain}));
  std::filesystem::remove_all(dir);

  auto out = tasks::run_tests_on_source(t, "def f(x):\n    return x\n", 5.0);
  CHECK(out.total == 3);
  CHECK(out.passed == 2);
  CHECK(out.essential_passed == 1);
  CHECK_FALSE(out.passed_all());

  CHECK(tasks::shell_quote("it's") == "'it'\\''s'");
  CHECK(tasks::instruction_words("  write  f\tnow ") ==
        std::vector<std::string>{"write", "f", "now"});
}

TEST_CASE("synthetic tasks") {
  auto sk = synth::make_skeletons(30, 5);
  REQUIRE(sk.size() == 30);
  CHECK(sk[0].task_id == "syn0000");
  auto again = synth::make_skeletons(30, 5);
  for (std::size_t i = 0; i < sk.size(); ++i) {
    CHECK(synth::render(sk[i], synth::Style::flagged()) ==
          synth::render(again[i], synth::Style::flagged()));
  }
  auto rules = quality::default_mock_rules();
  int insertion_only = 0;
  for (const auto& s : sk) {
    auto clean = synth::render(s, synth::Style::clean());
    auto flagged = synth::render(s, synth::Style::flagged());
    CHECK(quality::compute_quality_score(
              quality::mock_analyze_source(clean, rules)) == 10.0);
    auto rep = quality::mock_analyze_source(flagged, rules);
    CHECK(static_cast<int>(rep.issues.size()) == s.idiom_count());
    auto spec = synth::task_spec(s, "interview");
    CHECK(tasks::run_tests_on_source(spec, clean, 5.0).passed_all());
    CHECK(tasks::run_tests_on_source(spec, flagged, 5.0).passed_all());
    if (s.insertion_only()) ++insertion_only;
  }
  CHECK(insertion_only > 0);
  CHECK(insertion_only < 30);
  auto corpus = synth::pretraining_corpus(sk, 4, 1);
  CHECK(corpus.size() == 120);
}
