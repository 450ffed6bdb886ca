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

#include "cpt/eval.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include "cpt/errors.hpp"

namespace cpt::eval {
namespace {

using i128 = __int128;

bool mul_overflows(i128 a, i128 b) {
  const i128 limit = (static_cast<i128>(1) << 120);
  return b != 0 && a > limit / b;
}

i128 gcd128(i128 a, i128 b) {
  while (b != 0) {
    i128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

int category_rank(char c) {
  static const std::string order = "ERCWF";
  auto pos = order.find(c);
  return pos == std::string::npos ? static_cast<int>(order.size())
                                  : static_cast<int>(pos);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

bool looks_numeric(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= '0' && c <= '9') || c == '.' || c == '-' || c == '+';
  });
}

}  // namespace

double pass_at_k(int n, int c, int k) {
  if (n < 0 || c < 0 || c > n) {
    throw ParameterError("pass_at_k needs 0 <= c <= n");
  }
  if (k < 1 || k > n) throw ParameterError("pass_at_k needs 1 <= k <= n");
  if (n - c < k) return 1.0;
  // C(n-c, k) / C(n, k) = prod_{i<k} (n-c-i) / (n-i), kept as a reduced
  // integer fraction.
  i128 num = 1;
  i128 den = 1;
  for (int i = 0; i < k; ++i) {
    i128 a = n - c - i;
    i128 b = n - i;
    if (mul_overflows(num, a) || mul_overflows(den, b)) {
      double ratio = static_cast<double>(num) / static_cast<double>(den);
      for (int j = i; j < k; ++j) {
        ratio *= static_cast<double>(n - c - j) / static_cast<double>(n - j);
      }
      return 1.0 - ratio;
    }
    num *= a;
    den *= b;
    i128 g = gcd128(num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }
  return static_cast<double>(den - num) / static_cast<double>(den);
}

std::string normalize_category(const std::string& label) {
  std::string l;
  for (char ch : label) l += static_cast<char>(std::tolower(
                                static_cast<unsigned char>(ch)));
  if (l == "introductory" || l == "interview" || l == "competition") return l;
  return "other";
}

QualityAggregate aggregate_quality(const std::vector<TaskResult>& results) {
  if (results.empty()) throw ParameterError("no task results to aggregate");
  struct Acc {
    int tasks = 0;
    double means = 0.0, maxes = 0.0, mins = 0.0;
  };
  std::map<std::string, Acc> acc;
  for (const auto& t : results) {
    if (t.samples.empty()) {
      throw ParameterError("task " + t.task_id + " has no samples");
    }
    double sum = 0.0;
    double mx = t.samples.front().quality;
    double mn = mx;
    for (const auto& s : t.samples) {
      sum += s.quality;
      mx = std::max(mx, s.quality);
      mn = std::min(mn, s.quality);
    }
    const double mean = sum / static_cast<double>(t.samples.size());
    for (const std::string& key : {normalize_category(t.category),
                                   std::string("all")}) {
      Acc& a = acc[key];
      ++a.tasks;
      a.means += mean;
      a.maxes += mx;
      a.mins += mn;
    }
  }
  QualityAggregate out;
  for (const auto& [key, a] : acc) {
    CategoryStats s;
    s.tasks = a.tasks;
    s.mean_of_means = a.means / a.tasks;
    s.mean_of_maxes = a.maxes / a.tasks;
    s.mean_of_mins = a.mins / a.tasks;
    out[key] = s;
  }
  return out;
}

double mean_pass_at_k(const std::vector<TaskResult>& results, int k) {
  double sum = 0.0;
  int count = 0;
  for (const auto& t : results) {
    int n = static_cast<int>(t.samples.size());
    if (n < k) continue;
    int c = 0;
    for (const auto& s : t.samples) c += s.passed_all_tests ? 1 : 0;
    sum += pass_at_k(n, c, k);
    ++count;
  }
  return count == 0 ? -1.0 : sum / count;
}

std::vector<IssueDelta> issue_frequency_report(
    const std::vector<TaskResult>& baseline,
    const std::vector<TaskResult>& optimized, int per_task_cap) {
  std::set<std::string> base_ids, opt_ids;
  for (const auto& t : baseline) base_ids.insert(t.task_id);
  for (const auto& t : optimized) opt_ids.insert(t.task_id);
  if (base_ids != opt_ids) {
    throw AlignmentError(
        "baseline and optimized results cover different task ids");
  }
  struct Side {
    int count = 0;
    double score_sum = 0.0;
    int programs = 0;
  };
  // check_id -> (category, baseline, optimized)
  std::map<std::string, std::pair<char, std::array<Side, 2>>> table;
  auto tally = [&](const std::vector<TaskResult>& results, int side) {
    for (const auto& t : results) {
      int used = 0;
      for (const auto& s : t.samples) {
        if (!s.valid) continue;
        if (used++ >= per_task_cap) break;
        std::set<std::string> present;
        for (const auto& issue : s.issues) {
          auto& entry = table[issue.check_id];
          entry.first = quality::category_letter(issue.category);
          ++entry.second[side].count;
          present.insert(issue.check_id);
        }
        for (const auto& id : present) {
          auto& sd = table[id].second[side];
          sd.score_sum += s.quality;
          ++sd.programs;
        }
      }
    }
  };
  tally(baseline, 0);
  tally(optimized, 1);
  std::vector<IssueDelta> out;
  for (const auto& [id, entry] : table) {
    const auto& [b, o] = entry.second;
    if (b.count == 0 && o.count == 0) continue;
    IssueDelta d;
    d.check_id = id;
    d.category = entry.first;
    d.baseline_count = b.count;
    d.optimized_count = o.count;
    d.change = o.count - b.count;
    d.baseline_avg_score = b.programs ? b.score_sum / b.programs : 0.0;
    d.optimized_avg_score = o.programs ? o.score_sum / o.programs : 0.0;
    out.push_back(d);
  }
  std::sort(out.begin(), out.end(),
            [](const IssueDelta& x, const IssueDelta& y) {
              int rx = category_rank(x.category);
              int ry = category_rank(y.category);
              if (rx != ry) return rx < ry;
              return x.check_id < y.check_id;
            });
  return out;
}

std::string render_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t i = 0; i < header.size(); ++i) width[i] = header[i].size();
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size() && i < width.size(); ++i) {
      width[i] = std::max(width[i], r[i].size());
    }
  }
  std::ostringstream os;
  auto emit = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < width.size(); ++i) {
      const std::string cell = i < r.size() ? r[i] : "";
      if (i > 0) os << "  ";
      if (i > 0 && looks_numeric(cell)) {
        os << std::setw(static_cast<int>(width[i])) << std::right << cell;
      } else if (i + 1 < width.size()) {
        os << std::setw(static_cast<int>(width[i])) << std::left << cell;
      } else {
        os << cell;
      }
    }
    os << '\n';
  };
  emit(header);
  std::size_t total = 0;
  for (auto w : width) total += w;
  total += 2 * (width.empty() ? 0 : width.size() - 1);
  os << std::string(total, '-') << '\n';
  for (const auto& r : rows) emit(r);
  return os.str();
}

std::string render_csv(const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream os;
  auto emit = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i > 0) os << ',';
      os << csv_field(r[i]);
    }
    os << '\n';
  };
  emit(header);
  for (const auto& r : rows) emit(r);
  return os.str();
}

std::string format_fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  std::string s = os.str();
  // Values that round to zero print without a sign.
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) {
    s.erase(0, 1);
  }
  return s;
}

}  // namespace cpt::eval
