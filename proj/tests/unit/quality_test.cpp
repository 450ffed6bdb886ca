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

#include <filesystem>
#include <fstream>
#include <random>

#include "cpt/errors.hpp"
#include "cpt/quality.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace cpt;
using namespace cpt::quality;

namespace {

LintReport counts(bool fatal, int e, int r, int c, int w, int s) {
  LintReport rep;
  rep.fatal = fatal;
  rep.e_count = e;
  rep.r_count = r;
  rep.c_count = c;
  rep.w_count = w;
  rep.statements = s;
  return rep;
}

IssueRecord issue(std::string id, std::string msg) {
  auto cat = category_from_letter(id[0]);
  return {std::move(id), cat.value(), 1, std::move(msg)};
}

std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "cpt_quality_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

void write(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
  std::filesystem::permissions(p, std::filesystem::perms::owner_all,
                               std::filesystem::perm_options::add);
}

}  // namespace

TEST_CASE("quality score examples") {
  CHECK(compute_quality_score(counts(false, 0, 0, 0, 0, 5)) == 10.0);
  CHECK(compute_quality_score(counts(true, 3, 1, 0, 2, 9)) == 0.0);
  CHECK(compute_quality_score(counts(false, 1, 2, 1, 0, 10)) == 2.0);
  CHECK(compute_quality_score(counts(false, 2, 0, 0, 0, 5)) == 0.0);
  CHECK_THROWS_AS(compute_quality_score(counts(false, 0, 0, 0, 0, 0)),
                  InvalidReportError);
}

TEST_CASE("quality score is bounded, monotone and weights errors five-fold") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> cnt(0, 6), stm(1, 60);
  for (int it = 0; it < 2000; ++it) {
    int e = cnt(rng), r = cnt(rng), c = cnt(rng), w = cnt(rng), s = stm(rng);
    double base = compute_quality_score(counts(false, e, r, c, w, s));
    CHECK(base >= 0.0);
    CHECK(base <= 10.0);
    CHECK(base == oracle::quality_score(false, e, r, c, w, s));
    CHECK(compute_quality_score(counts(false, e + 1, r, c, w, s)) <= base);
    CHECK(compute_quality_score(counts(false, e, r + 1, c, w, s)) <= base);
    CHECK(compute_quality_score(counts(false, e, r, c + 1, w, s)) <= base);
    CHECK(compute_quality_score(counts(false, e, r, c, w + 1, s)) <= base);
    CHECK(compute_quality_score(counts(true, e, r, c, w, s)) == 0.0);
    // Pre-clamp drop for one more error is 50/S; compare where unclamped.
    double next = compute_quality_score(counts(false, e + 1, r, c, w, s));
    if (next > 0.0) {
      CHECK(base - next == doctest::Approx(50.0 / s).epsilon(1e-12));
    }
  }
}

TEST_CASE("check filter") {
  std::vector<IssueRecord> list{issue("C0103", "invalid-name x"),
                                issue("W0612", "unused-variable y")};
  CHECK(apply_check_filter(list, CheckFilter{}) == list);

  CheckFilter by_id;
  by_id.excluded_ids = {"C0103"};
  auto kept = apply_check_filter(list, by_id);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].check_id == "W0612");

  CheckFilter by_name;
  by_name.excluded_name_patterns = {"import"};
  std::vector<IssueRecord> imp{issue("W0611", "unused-import os")};
  CHECK(apply_check_filter(imp, by_name).empty());

  auto defaults = CheckFilter::defaults();
  std::vector<IssueRecord> mixed{
      issue("C0303", "trailing-whitespace"), issue("C0304", "missing-final-newline"),
      issue("C0103", "invalid-name"), issue("W0611", "unused-import"),
      issue("R1705", "no-else-return"), issue("W0612", "unused-variable")};
  auto once = apply_check_filter(mixed, defaults);
  CHECK(once.size() == 2);
  CHECK(apply_check_filter(once, defaults) == once);
}

TEST_CASE("report parsing") {
  auto rep = parse_analyzer_report(
      "a.py:3:0: W0612: unused-variable\na.py:7:0: R1705: no-else-return\n", 4,
      CheckFilter{});
  CHECK(rep.e_count == 0);
  CHECK(rep.r_count == 1);
  CHECK(rep.c_count == 0);
  CHECK(rep.w_count == 1);
  CHECK(compute_quality_score(rep) == 5.0);

  auto empty = parse_analyzer_report("", 1, CheckFilter{});
  CHECK(empty.issues.empty());
  CHECK(compute_quality_score(empty) == 10.0);

  auto fatal = parse_analyzer_report("a.py:1:0: F0001: fatal (cannot parse)\n",
                                     3, CheckFilter{});
  CHECK(fatal.fatal);
  CHECK(compute_quality_score(fatal) == 0.0);

  auto trailer = parse_analyzer_report(
      "************* Module a\na.py:2:0: C0121: singleton-comparison\n"
      "#statements=20\n",
      1, CheckFilter{});
  CHECK(trailer.statements == 20);
  CHECK(compute_quality_score(trailer) == 9.5);

  try {
    parse_analyzer_report("a.py:1:0: W0001: ok\ngarbage\n", 1, CheckFilter{});
    FAIL("expected a parse error");
  } catch (const ReportParseError& e) {
    CHECK(e.line_number() == 2);
  }
  CHECK_THROWS_AS(parse_analyzer_report("a.py:1:0: X0001: what\n", 1,
                                        CheckFilter{}),
                  ReportParseError);
}

TEST_CASE("parse then score matches the rational oracle on random reports") {
  std::mt19937_64 rng(11);
  const char letters[] = {'E', 'R', 'C', 'W'};
  for (int it = 0; it < 300; ++it) {
    int n = static_cast<int>(rng() % 12);
    int s = 1 + static_cast<int>(rng() % 40);
    int tally[4] = {0, 0, 0, 0};
    std::string raw;
    for (int i = 0; i < n; ++i) {
      int k = static_cast<int>(rng() % 4);
      ++tally[k];
      raw += "m.py:" + std::to_string(i + 1) + ":0: " + letters[k] + "0" +
             std::to_string(100 + k) + ": some-check\n";
    }
    auto rep = parse_analyzer_report(raw, s, CheckFilter{});
    CHECK(compute_quality_score(rep) ==
          oracle::quality_score(false, tally[0], tally[1], tally[2], tally[3],
                                s));
  }
}

TEST_CASE("statement counting") {
  CHECK(count_statements(lexdiff::TokenSeq{}) == 1);
  CHECK(count_statements(lexdiff::tokenize("x = 1\ny = 2\n")) == 2);
  CHECK(count_statements(lexdiff::tokenize(
            "def f(x):\n    if x:\n        return 1\n    return 2\n")) == 4);
}

TEST_CASE("mock analyzer rules") {
  auto rules = default_mock_rules();
  const std::string else_after_return =
      "def f(x):\n    if x:\n        return 1\n    else:\n        return 2\n";
  auto rep = mock_analyze_source(else_after_return, rules);
  CHECK(rep.r_count == 1);
  REQUIRE(rep.issues.size() == 1);
  CHECK(rep.issues[0].check_id == "R1705");
  CHECK(rep.issues[0].line == 3);

  auto clean = mock_analyze_source("def f(x):\n    return x\n", rules);
  CHECK(clean.issues.empty());
  CHECK(compute_quality_score(clean) == 10.0);

  auto twice = mock_analyze_source(
      "def f(a, b):\n    if a == None:\n        return b == None\n    return 0\n",
      rules);
  CHECK(twice.c_count == 2);

  auto fatal = mock_analyze_source("x = 'open\n", rules);
  CHECK(fatal.fatal);
  CHECK(compute_quality_score(fatal) == 0.0);
}

TEST_CASE("mock analyzer flags each synthetic idiom") {
  auto rules = default_mock_rules();
  auto ids = [&](const std::string& src) {
    std::vector<std::string> out;
    for (const auto& i : mock_analyze_source(src, rules).issues) {
      out.push_back(i.check_id);
    }
    return out;
  };
  CHECK(ids("def f(xs):\n    if len(xs) == 0:\n        return 0\n    return 1\n") ==
        std::vector<std::string>{"C1802"});
  CHECK(ids("def f(xs):\n    for i in range(len(xs)):\n        pass\n    return 1\n") ==
        std::vector<std::string>{"C0200"});
  CHECK(ids("def f(xs):\n    total = 0\n    pass\n    return total\n") ==
        std::vector<std::string>{"W0107"});
  CHECK(ids("def f(t):\n    return (t)\n") == std::vector<std::string>{"C0325"});
  CHECK(ids("def f(t, y):\n    if t > y:\n        return True\n    return False\n") ==
        std::vector<std::string>{"R1703"});
}

TEST_CASE("external analyzer") {
  auto src = temp_path("clean.py");
  write(src, "x = 1\ny = 2\n");

  SUBCASE("clean output scores 10") {
    auto tool = temp_path("fake_lint_clean.sh");
    write(tool, "#!/bin/sh\nexit 0\n");
    AnalyzerConfig cfg;
    cfg.executable = tool.string();
    CHECK(compute_quality_score(run_external_analyzer(src, cfg)) == 10.0);
  }
  SUBCASE("issues and exit bit mask") {
    auto tool = temp_path("fake_lint_issues.sh");
    write(tool,
          "#!/bin/sh\nfor a in \"$@\"; do f=\"$a\"; done\n"
          "echo \"$f:1:0: W0612: unused-variable\"\nexit 4\n");
    AnalyzerConfig cfg;
    cfg.executable = tool.string();
    auto rep = run_external_analyzer(src, cfg);
    CHECK(rep.w_count == 1);
    CHECK(rep.statements == 2);
    CHECK(compute_quality_score(rep) == 5.0);
  }
  SUBCASE("fatal output") {
    auto tool = temp_path("fake_lint_fatal.sh");
    write(tool, "#!/bin/sh\necho \"x.py:1:0: F0001: fatal\"\nexit 1\n");
    AnalyzerConfig cfg;
    cfg.executable = tool.string();
    CHECK(compute_quality_score(run_external_analyzer(src, cfg)) == 0.0);
  }
  SUBCASE("missing executable") {
    AnalyzerConfig cfg;
    cfg.executable = "/nonexistent/analyzer-binary";
    CHECK_THROWS_AS(run_external_analyzer(src, cfg), AnalyzerUnavailableError);
  }
  SUBCASE("crash exit") {
    auto tool = temp_path("fake_lint_crash.sh");
    write(tool, "#!/bin/sh\nexit 32\n");
    AnalyzerConfig cfg;
    cfg.executable = tool.string();
    CHECK_THROWS_AS(run_external_analyzer(src, cfg), AnalyzerUnavailableError);
  }
  SUBCASE("timeout") {
    auto tool = temp_path("fake_lint_slow.sh");
    write(tool, "#!/bin/sh\nsleep 5\n");
    AnalyzerConfig cfg;
    cfg.executable = tool.string();
    cfg.timeout_seconds = 0.2;
    CHECK_THROWS_AS(run_external_analyzer(src, cfg), AnalyzerTimeoutError);
  }
}
