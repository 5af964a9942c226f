// SPDX-License-Identifier: Apache-2.0

#include "scl/evalkit.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "codec.hpp"

namespace scl {

using codec::json;

double accuracy(std::span<const SelfCorrectionRecord> records, std::size_t turn) {
  if (records.empty()) throw DataError("accuracy over an empty record list");
  std::size_t correct = 0;
  for (const auto& r : records) {
    if (turn >= r.correctness.size())
      throw DataError("record \"" + r.sample_id + "\" has no turn " + std::to_string(turn));
    if (r.correctness[turn]) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(records.size());
}

TransitionCounts type_distribution(std::span<const SelfCorrectionRecord> records) {
  TransitionCounts counts;
  for (const auto& r : records) ++counts[r.transition];
  return counts;
}

std::vector<double> multi_turn_report(std::span<const SelfCorrectionRecord> records) {
  if (records.empty()) throw DataError("multi-turn report over an empty record list");
  const auto turns = records.front().correctness.size();
  for (const auto& r : records)
    if (r.correctness.size() != turns)
      throw DataError("ragged turn counts: \"" + r.sample_id + "\" has " + std::to_string(r.correctness.size()) +
                      " turns, expected " + std::to_string(turns));
  std::vector<double> out;
  for (std::size_t t = 0; t < turns; ++t) out.push_back(accuracy(records, t));
  return out;
}

void validate_table(const ScoreTable& table) {
  if (table.methods.empty() || table.benchmarks.empty()) throw DataError("score table needs methods and benchmarks");
  if (table.scores.size() != table.methods.size()) throw DataError("incomplete score table: missing method rows");
  for (std::size_t m = 0; m < table.scores.size(); ++m) {
    if (table.scores[m].size() != table.benchmarks.size())
      throw DataError("incomplete score table: row \"" + table.methods[m] + "\" has " +
                      std::to_string(table.scores[m].size()) + " of " + std::to_string(table.benchmarks.size()) +
                      " cells");
    for (double s : table.scores[m])
      if (!(s >= 0.0 && s <= 100.0)) throw DataError("score out of [0, 100] in row \"" + table.methods[m] + "\"");
  }
}

std::vector<double> column_ranks(const ScoreTable& table, std::size_t benchmark, TieRule ties) {
  const auto n = table.methods.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return table.scores[a][benchmark] > table.scores[b][benchmark];
  });
  std::vector<double> ranks(n, 0.0);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && table.scores[order[j + 1]][benchmark] == table.scores[order[i]][benchmark]) ++j;
    // positions i..j (0-based) -> ranks i+1..j+1, mean (i+j)/2 + 1
    const double shared =
        ties == TieRule::Fractional ? static_cast<double>(i + j) / 2.0 + 1.0 : static_cast<double>(i + 1);
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
    i = j + 1;
  }
  return ranks;
}

std::vector<MethodRank> average_rank(const ScoreTable& table, TieRule ties) {
  validate_table(table);
  std::vector<double> sums(table.methods.size(), 0.0);
  for (std::size_t b = 0; b < table.benchmarks.size(); ++b) {
    const auto r = column_ranks(table, b, ties);
    for (std::size_t m = 0; m < r.size(); ++m) sums[m] += r[m];
  }
  std::vector<MethodRank> out;
  for (std::size_t m = 0; m < table.methods.size(); ++m)
    out.push_back(MethodRank{table.methods[m], sums[m] / static_cast<double>(table.benchmarks.size())});
  return out;
}

double round_half_up(double x, int decimals) {
  const double scale = std::pow(10.0, decimals);
  // 1e-9 absorbs representation error so 1.005 rounds to 1.01.
  return std::floor(x * scale + 0.5 + 1e-9) / scale;
}

std::string format_fixed(double x, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, round_half_up(x, decimals));
  return buf;
}

namespace {

std::vector<std::string> split_csv_row(std::string_view line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.push_back(std::move(cur));
  for (auto& cell : cells) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cell = b == std::string::npos ? std::string() : cell.substr(b, e - b + 1);
  }
  return cells;
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string shortest(double x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

}  // namespace

ScoreTable parse_score_table_csv(std::string_view text) {
  ScoreTable table;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split_csv_row(line);
    if (header) {
      if (cells.size() < 2) throw DataError("score table header needs a method column and a benchmark");
      table.benchmarks.assign(cells.begin() + 1, cells.end());
      header = false;
      continue;
    }
    if (cells.size() != table.benchmarks.size() + 1)
      throw DataError("incomplete score table: line " + std::to_string(line_no) + " has " +
                      std::to_string(cells.size() - 1) + " of " + std::to_string(table.benchmarks.size()) + " cells");
    table.methods.push_back(cells[0]);
    std::vector<double> row;
    for (std::size_t i = 1; i < cells.size(); ++i) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cells[i], &used));
        if (used != cells[i].size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw DataError("line " + std::to_string(line_no) + ": \"" + cells[i] + "\" is not a number");
      }
    }
    table.scores.push_back(std::move(row));
  }
  validate_table(table);
  return table;
}

std::string serialize_score_table_csv(const ScoreTable& table) {
  std::string out = "method";
  for (const auto& b : table.benchmarks) out += "," + csv_cell(b);
  out += '\n';
  for (std::size_t m = 0; m < table.methods.size(); ++m) {
    out += csv_cell(table.methods[m]);
    for (double s : table.scores[m]) out += "," + format_fixed(s, 2);
    out += '\n';
  }
  return out;
}

std::string render_rank_table(const ScoreTable& table, std::span<const MethodRank> ranks) {
  std::size_t method_w = 6;
  for (const auto& m : table.methods) method_w = std::max(method_w, m.size());
  std::ostringstream os;
  auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w > s.size() ? w - s.size() : 0, ' '); };
  os << pad("Method", method_w);
  for (const auto& b : table.benchmarks) os << " | " << pad(b, std::max<std::size_t>(b.size(), 6));
  os << " | Rank\n";
  for (std::size_t m = 0; m < table.methods.size(); ++m) {
    os << pad(table.methods[m], method_w);
    for (std::size_t b = 0; b < table.benchmarks.size(); ++b)
      os << " | " << pad(format_fixed(table.scores[m][b], 2), std::max<std::size_t>(table.benchmarks[b].size(), 6));
    os << " | " << (m < ranks.size() ? format_fixed(ranks[m].mean_rank, 2) : std::string("-")) << '\n';
  }
  return os.str();
}

std::vector<SweepPoint> subset_sweep(const SelfCorSet& set, std::span<const MCQSample> eval_set,
                                     std::span<const double> p_grid, const DPOConfig& config,
                                     std::uint64_t subset_seed) {
  validate_config(config);
  for (double p : p_grid)
    if (!(p >= 0.0 && p <= 1.0)) throw UsageError("sweep proportion " + shortest(p) + " outside [0, 1]");
  std::vector<double> grid(p_grid.begin(), p_grid.end());
  std::sort(grid.begin(), grid.end());

  const ToyPolicy untrained = initial_policy(config);
  std::vector<SweepPoint> points;
  for (double p : grid) {
    const auto part = subset(set, p, subset_seed);
    SweepPoint pt{p, part.pairs.size(), 0.0};
    if (part.pairs.empty()) {
      pt.accuracy = policy_accuracy(untrained, eval_set);
    } else {
      const auto result = train(part, config);
      pt.accuracy = policy_accuracy(result.policy, eval_set);
    }
    points.push_back(pt);
  }
  return points;
}

std::string serialize_sweep_csv(std::span<const SweepPoint> points) {
  std::string out = "p,pairs,accuracy\n";
  for (const auto& pt : points) out += shortest(pt.p) + "," + std::to_string(pt.pairs) + "," + format_fixed(pt.accuracy, 2) + "\n";
  return out;
}

std::string serialize_report_json(const EvalReport& r) {
  json j = json::object();
  if (r.types) {
    json t = json::object();
    for (auto k : kAllTransitions) t[std::string(to_string(k))] = (*r.types)[k];
    t["total"] = r.types->total();
    j["type_distribution"] = std::move(t);
  }
  if (!r.turn_accuracy.empty()) j["turn_accuracy"] = r.turn_accuracy;
  if (!r.ranks.empty()) {
    json ranks = json::array();
    for (const auto& m : r.ranks)
      ranks.push_back(json{{"method", m.method}, {"mean_rank", m.mean_rank}, {"display", format_fixed(m.mean_rank, 2)}});
    j["average_rank"] = std::move(ranks);
  }
  if (r.table) {
    j["score_table"] = json{{"methods", r.table->methods}, {"benchmarks", r.table->benchmarks}, {"scores", r.table->scores}};
  }
  if (!r.sweep.empty()) {
    json sweep = json::array();
    for (const auto& pt : r.sweep) sweep.push_back(json{{"p", pt.p}, {"pairs", pt.pairs}, {"accuracy", pt.accuracy}});
    j["subset_sweep"] = std::move(sweep);
  }
  if (r.policy_accuracy) j["policy_accuracy"] = *r.policy_accuracy;
  return j.dump(2) + "\n";
}

std::string render_report_text(const EvalReport& r) {
  std::ostringstream os;
  if (r.types) {
    os << "Transition types\n";
    for (auto k : kAllTransitions) os << "  " << to_string(k) << ": " << (*r.types)[k] << '\n';
    os << "  total: " << r.types->total() << "\n\n";
  }
  if (!r.turn_accuracy.empty()) {
    os << "Per-turn accuracy (%)\n ";
    for (std::size_t t = 0; t < r.turn_accuracy.size(); ++t) os << " | Turn " << t;
    os << "\n ";
    for (double a : r.turn_accuracy) os << " | " << format_fixed(a, 2);
    os << "\n\n";
  }
  if (r.table && !r.ranks.empty()) os << render_rank_table(*r.table, r.ranks) << '\n';
  if (!r.sweep.empty()) {
    os << "Subset sweep\n  p     pairs  accuracy\n";
    for (const auto& pt : r.sweep) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "  %-5s %-6zu %s\n", format_fixed(pt.p, 1).c_str(), pt.pairs,
                    format_fixed(pt.accuracy, 2).c_str());
      os << buf;
    }
    os << '\n';
  }
  if (r.policy_accuracy) os << "Policy accuracy on eval split: " << format_fixed(*r.policy_accuracy, 2) << "%\n";
  return os.str();
}

std::string_view to_string(TieRule t) { return t == TieRule::Fractional ? "fractional" : "min"; }

TieRule tie_rule_from_string(std::string_view s) {
  if (s == "fractional") return TieRule::Fractional;
  if (s == "min") return TieRule::Min;
  throw UsageError("unknown tie rule \"" + std::string(s) + "\" (expected fractional or min)");
}

}  // namespace scl
