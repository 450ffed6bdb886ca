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

#ifndef CPT_QUALITY_HPP
#define CPT_QUALITY_HPP

#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cpt/lexdiff.hpp"

namespace cpt::quality {

enum class Category : char {
  kError = 'E',
  kRefactor = 'R',
  kConvention = 'C',
  kWarning = 'W',
  kFatal = 'F',
};

std::optional<Category> category_from_letter(char letter);
char category_letter(Category c);

struct IssueRecord {
  std::string check_id;  // e.g. "R1705"
  Category category = Category::kWarning;
  int line = 1;
  std::string message;  // starts with the symbolic check name

  // First word of the message, e.g. "no-else-return".
  std::string_view check_name() const;

  friend bool operator==(const IssueRecord&, const IssueRecord&) = default;
};

struct LintReport {
  bool fatal = false;
  int e_count = 0;
  int r_count = 0;
  int c_count = 0;
  int w_count = 0;
  int statements = 1;
  std::vector<IssueRecord> issues;

  // Derives the counts and the fatal flag from `issues`.
  static LintReport from_issues(std::vector<IssueRecord> issues,
                                int statements);
};

struct CheckFilter {
  std::set<std::string> excluded_ids;
  // Substrings matched against IssueRecord::check_name().
  std::vector<std::string> excluded_name_patterns;

  // Whitespace, newline, invalid-name and import checks.
  static CheckFilter defaults();

  bool excludes(const IssueRecord& issue) const;
};

// 0 for fatal reports, otherwise max(0, 10 - (5E + R + C + W) / S * 10).
// Throws InvalidReportError when statements < 1.
double compute_quality_score(const LintReport& report);

std::vector<IssueRecord> apply_check_filter(std::span<const IssueRecord> issues,
                                            const CheckFilter& filter);

// Parses the analyzer line protocol:
//   <path>:<line>:<col>: <CHECK_ID>: <message>
// plus an optional "#statements=<N>" trailer, which overrides `statements`.
// Blank lines and "*************" module banners are skipped.
LintReport parse_analyzer_report(std::string_view raw, int statements,
                                 const CheckFilter& filter);

// Counts non-empty logical lines (simple statements and block headers).
// Never returns less than 1.
int count_statements(const lexdiff::TokenSeq& tokens);

// One element of a mock-analyzer token pattern.
struct PatternElement {
  enum class Kind { kLiteral, kName, kNumber, kString, kAny, kSkip };
  Kind kind = Kind::kLiteral;
  std::string text;  // kLiteral only
};

// Token pattern mapped to the issue it produces. Pattern source syntax is
// space-separated tokens; "$NAME", "$NUM", "$STR" and "$ANY" match a single
// token of that class and "$SKIP" lazily skips tokens on the same logical
// line.
struct MockRule {
  std::string check_id;
  std::string name;
  std::vector<PatternElement> pattern;

  static MockRule parse(std::string check_id, std::string name,
                        std::string_view pattern_source);
};

// Rules for the idioms used by the synthetic corpus.
std::vector<MockRule> default_mock_rules();

// Scans once, emitting one issue per (rule, start position) match.
// statements = count_statements(tokens).
LintReport mock_analyze(const lexdiff::TokenSeq& tokens,
                        std::span<const MockRule> rules,
                        const CheckFilter& filter = {});

// Tokenizes `source` and runs mock_analyze; sources the lexer rejects
// produce a fatal F0001 report.
LintReport mock_analyze_source(std::string_view source,
                               std::span<const MockRule> rules,
                               const CheckFilter& filter = {});

struct AnalyzerConfig {
  std::string executable;
  // "{file}" is replaced by the source path.
  std::vector<std::string> args{
      "--score=n", "--msg-template={path}:{line}:{column}: {msg_id}: {symbol}",
      "{file}"};
  double timeout_seconds = 30.0;
  // Exit statuses above this value are treated as a crash. Linters commonly
  // use a bit mask of found-issue categories below it.
  int max_ok_exit = 31;
  CheckFilter filter = CheckFilter::defaults();
};

// Runs the external analyzer on one file. The statement count comes from the
// report trailer when present, else from count_statements on our own
// tokenization of the file. Throws AnalyzerUnavailableError or
// AnalyzerTimeoutError.
LintReport run_external_analyzer(const std::filesystem::path& source_path,
                                 const AnalyzerConfig& config);

}  // namespace cpt::quality

#endif  // CPT_QUALITY_HPP
