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

#include "cpt/quality.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <regex>
#include <sstream>

#include "cpt/errors.hpp"
#include "cpt/process.hpp"

namespace cpt::quality {

std::optional<Category> category_from_letter(char letter) {
  switch (letter) {
    case 'E':
      return Category::kError;
    case 'R':
      return Category::kRefactor;
    case 'C':
      return Category::kConvention;
    case 'W':
      return Category::kWarning;
    case 'F':
      return Category::kFatal;
    default:
      return std::nullopt;
  }
}

char category_letter(Category c) { return static_cast<char>(c); }

std::string_view IssueRecord::check_name() const {
  std::string_view m = message;
  auto end = m.find_first_of(" \t(");
  return m.substr(0, end);
}

LintReport LintReport::from_issues(std::vector<IssueRecord> issues,
                                   int statements) {
  LintReport r;
  r.statements = statements;
  for (const auto& i : issues) {
    switch (i.category) {
      case Category::kError:
        ++r.e_count;
        break;
      case Category::kRefactor:
        ++r.r_count;
        break;
      case Category::kConvention:
        ++r.c_count;
        break;
      case Category::kWarning:
        ++r.w_count;
        break;
      case Category::kFatal:
        r.fatal = true;
        break;
    }
  }
  r.issues = std::move(issues);
  return r;
}

CheckFilter CheckFilter::defaults() {
  CheckFilter f;
  f.excluded_name_patterns = {"whitespace", "newline", "invalid-name",
                              "import"};
  return f;
}

bool CheckFilter::excludes(const IssueRecord& issue) const {
  if (excluded_ids.contains(issue.check_id)) return true;
  std::string_view name = issue.check_name();
  return std::any_of(excluded_name_patterns.begin(),
                     excluded_name_patterns.end(),
                     [&](const std::string& p) {
                       return name.find(p) != std::string_view::npos;
                     });
}

double compute_quality_score(const LintReport& report) {
  if (report.statements < 1) {
    throw InvalidReportError("report has " +
                             std::to_string(report.statements) +
                             " statements; analyzer output is malformed");
  }
  if (report.fatal) return 0.0;
  std::int64_t weighted = 5 * std::int64_t{report.e_count} + report.r_count +
                          report.c_count + report.w_count;
  std::int64_t s = report.statements;
  // 10 - weighted/S*10 == 10*(S - weighted)/S, evaluated with one rounding.
  std::int64_t numer = 10 * (s - weighted);
  if (numer <= 0) return 0.0;
  return static_cast<double>(numer) / static_cast<double>(s);
}

std::vector<IssueRecord> apply_check_filter(std::span<const IssueRecord> issues,
                                            const CheckFilter& filter) {
  std::vector<IssueRecord> out;
  out.reserve(issues.size());
  for (const auto& i : issues) {
    if (!filter.excludes(i)) out.push_back(i);
  }
  return out;
}

namespace {

bool parse_int(std::string_view s, int& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size();
}

}  // namespace

LintReport parse_analyzer_report(std::string_view raw, int statements,
                                 const CheckFilter& filter) {
  static const std::regex kLine(
      R"(^(.*):(\d+):(-?\d+): ([A-Za-z][A-Za-z0-9]*): ?(.*)$)");
  constexpr std::string_view kTrailer = "#statements=";

  std::vector<IssueRecord> issues;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < raw.size()) {
    std::size_t nl = raw.find('\n', pos);
    std::string_view line = raw.substr(
        pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? raw.size() : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    if (line.starts_with("*************")) continue;
    if (line.starts_with(kTrailer)) {
      int n = 0;
      if (!parse_int(line.substr(kTrailer.size()), n) || n < 0) {
        throw ReportParseError(line_no, "bad statements trailer");
      }
      statements = n;
      continue;
    }
    std::match_results<std::string_view::const_iterator> m;
    if (!std::regex_match(line.begin(), line.end(), m, kLine)) {
      throw ReportParseError(line_no, "malformed issue line: " +
                                          std::string(line));
    }
    IssueRecord rec;
    rec.check_id = m[4].str();
    auto cat = category_from_letter(rec.check_id[0]);
    if (!cat) {
      throw ReportParseError(line_no, "unknown category letter in " +
                                          rec.check_id);
    }
    rec.category = *cat;
    std::string line_digits = m[2].str();
    if (!parse_int(line_digits, rec.line)) {
      throw ReportParseError(line_no, "bad line number");
    }
    // Module-level messages may carry line 0.
    rec.line = std::max(rec.line, 1);
    rec.message = m[5].str();
    issues.push_back(std::move(rec));
  }
  return LintReport::from_issues(apply_check_filter(issues, filter),
                                 statements);
}

int count_statements(const lexdiff::TokenSeq& tokens) {
  int count = 0;
  bool open_line = false;
  for (const auto& t : tokens.tokens) {
    switch (t.kind) {
      case lexdiff::TokenKind::kNewline:
        if (open_line) ++count;
        open_line = false;
        break;
      case lexdiff::TokenKind::kIndent:
      case lexdiff::TokenKind::kDedent:
        break;
      default:
        open_line = true;
    }
  }
  if (open_line) ++count;
  return std::max(count, 1);
}

MockRule MockRule::parse(std::string check_id, std::string name,
                         std::string_view pattern_source) {
  MockRule rule{std::move(check_id), std::move(name), {}};
  std::istringstream in{std::string(pattern_source)};
  std::string word;
  while (in >> word) {
    PatternElement e;
    if (word == "$NAME") {
      e.kind = PatternElement::Kind::kName;
    } else if (word == "$NUM") {
      e.kind = PatternElement::Kind::kNumber;
    } else if (word == "$STR") {
      e.kind = PatternElement::Kind::kString;
    } else if (word == "$ANY") {
      e.kind = PatternElement::Kind::kAny;
    } else if (word == "$SKIP") {
      e.kind = PatternElement::Kind::kSkip;
    } else {
      e.text = word;
    }
    rule.pattern.push_back(std::move(e));
  }
  if (rule.pattern.empty()) {
    throw ParameterError("mock rule " + rule.check_id + " has empty pattern");
  }
  return rule;
}

std::vector<MockRule> default_mock_rules() {
  return {
      MockRule::parse("R1705", "no-else-return",
                      "return $SKIP <nl> <dedent> else"),
      MockRule::parse("R1703", "simplifiable-if-statement",
                      "if $SKIP : <nl> <indent> return True <nl> <dedent> "
                      "return False"),
      MockRule::parse("C0121", "singleton-comparison", "== None"),
      MockRule::parse("C0200", "consider-using-enumerate", "range ( len ("),
      MockRule::parse("C1802", "use-implicit-booleaness-not-len",
                      "len ( $NAME ) == 0"),
      MockRule::parse("C0325", "superfluous-parens", "return ( $ANY ) <nl>"),
      MockRule::parse("W0107", "unnecessary-pass", "<nl> pass <nl>"),
  };
}

namespace {

using lexdiff::TokenKind;

bool element_matches(const PatternElement& e, const lexdiff::Token& t) {
  switch (e.kind) {
    case PatternElement::Kind::kLiteral:
      return t.text == e.text;
    case PatternElement::Kind::kName:
      return t.kind == TokenKind::kName;
    case PatternElement::Kind::kNumber:
      return t.kind == TokenKind::kNumber;
    case PatternElement::Kind::kString:
      return t.kind == TokenKind::kString;
    case PatternElement::Kind::kAny:
      return true;
    case PatternElement::Kind::kSkip:
      return false;
  }
  return false;
}

bool match_at(std::span<const PatternElement> pat,
              const std::vector<lexdiff::Token>& toks, std::size_t i) {
  if (pat.empty()) return true;
  const auto& e = pat.front();
  if (e.kind == PatternElement::Kind::kSkip) {
    for (std::size_t j = i; j <= toks.size(); ++j) {
      if (match_at(pat.subspan(1), toks, j)) return true;
      if (j < toks.size() && toks[j].kind == TokenKind::kNewline) break;
    }
    return false;
  }
  if (i >= toks.size() || !element_matches(e, toks[i])) return false;
  return match_at(pat.subspan(1), toks, i + 1);
}

int report_line(const std::vector<lexdiff::Token>& toks, std::size_t i) {
  for (std::size_t j = i; j < toks.size(); ++j) {
    auto k = toks[j].kind;
    if (k != TokenKind::kNewline && k != TokenKind::kIndent &&
        k != TokenKind::kDedent) {
      return toks[j].line;
    }
  }
  return i < toks.size() ? toks[i].line : 1;
}

}  // namespace

LintReport mock_analyze(const lexdiff::TokenSeq& tokens,
                        std::span<const MockRule> rules,
                        const CheckFilter& filter) {
  std::vector<IssueRecord> issues;
  const auto& toks = tokens.tokens;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    for (const auto& rule : rules) {
      if (match_at(rule.pattern, toks, i)) {
        auto cat = category_from_letter(rule.check_id.empty()
                                            ? '?'
                                            : rule.check_id[0]);
        IssueRecord rec{rule.check_id, cat.value_or(Category::kWarning),
                        std::max(report_line(toks, i), 1), rule.name};
        if (!filter.excludes(rec)) issues.push_back(std::move(rec));
      }
    }
  }
  return LintReport::from_issues(std::move(issues), count_statements(tokens));
}

LintReport mock_analyze_source(std::string_view source,
                               std::span<const MockRule> rules,
                               const CheckFilter& filter) {
  lexdiff::TokenSeq toks;
  try {
    toks = lexdiff::tokenize(source);
  } catch (const LexError& e) {
    IssueRecord rec{"F0001", Category::kFatal, 1,
                    std::string("fatal (") + e.what() + ")"};
    return LintReport::from_issues({std::move(rec)}, 1);
  }
  return mock_analyze(toks, rules, filter);
}

namespace {

std::string replace_all(std::string s, std::string_view from,
                        std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

}  // namespace

LintReport run_external_analyzer(const std::filesystem::path& source_path,
                                 const AnalyzerConfig& config) {
  if (config.executable.empty()) {
    throw AnalyzerUnavailableError("no analyzer executable configured");
  }
  std::ifstream in(source_path, std::ios::binary);
  if (!in) {
    throw Error("cannot read source file " + source_path.string());
  }
  std::stringstream buf;
  buf << in.rdbuf();
  std::string source = buf.str();

  std::vector<std::string> argv{config.executable};
  for (const auto& a : config.args) {
    argv.push_back(replace_all(a, "{file}", source_path.string()));
  }
  ProcessResult res = run_process(argv, config.timeout_seconds);
  if (!res.started) {
    throw AnalyzerUnavailableError("analyzer not found: " + config.executable);
  }
  if (res.timed_out) {
    throw AnalyzerTimeoutError("analyzer timed out after " +
                               std::to_string(config.timeout_seconds) +
                               " s on " + source_path.string());
  }
  if (res.signaled || res.exit_code > config.max_ok_exit) {
    throw AnalyzerUnavailableError(
        "analyzer crashed (exit " + std::to_string(res.exit_code) + ") on " +
        source_path.string());
  }
  int statements = 1;
  try {
    statements = count_statements(lexdiff::tokenize(source));
  } catch (const LexError&) {
    statements = 1;
  }
  return parse_analyzer_report(res.output, statements, config.filter);
}

}  // namespace cpt::quality
