// SPDX-License-Identifier: Apache-2.0
//
// Evaluation artifacts: accuracy, average rank over benchmarks, transition
// distributions, per-turn accuracy curves and training-subset sweeps.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scl/dpo.hpp"
#include "scl/grading.hpp"
#include "scl/prefset.hpp"
#include "scl/selfcorrect.hpp"

namespace scl {

// 100 * correct / n at `turn`. Unparseable responses count as incorrect.
double accuracy(std::span<const SelfCorrectionRecord> records, std::size_t turn);

TransitionCounts type_distribution(std::span<const SelfCorrectionRecord> records);

// Element t is accuracy(records, t). Throws DataError on ragged turn counts.
std::vector<double> multi_turn_report(std::span<const SelfCorrectionRecord> records);

// Accuracy percentages, scores[method][benchmark].
struct ScoreTable {
  std::vector<std::string> methods;
  std::vector<std::string> benchmarks;
  std::vector<std::vector<double>> scores;
};

void validate_table(const ScoreTable& table);

// Fractional: tied scores share the mean of their positions (1, 2.5, 2.5, 4).
// Min: tied scores all take the best position (1, 2, 2, 4).
enum class TieRule { Fractional, Min };
std::string_view to_string(TieRule t);
TieRule tie_rule_from_string(std::string_view s);

// Ranks within one benchmark column, highest score first.
std::vector<double> column_ranks(const ScoreTable& table, std::size_t benchmark,
                                 TieRule ties = TieRule::Fractional);

struct MethodRank {
  std::string method;
  double mean_rank = 0.0;
};

std::vector<MethodRank> average_rank(const ScoreTable& table, TieRule ties = TieRule::Fractional);

// Half-up rounding at `decimals` places, used for display only.
double round_half_up(double x, int decimals);
std::string format_fixed(double x, int decimals = 2);

// CSV: header "method,<benchmark>,...", then one row per method.
ScoreTable parse_score_table_csv(std::string_view text);
std::string serialize_score_table_csv(const ScoreTable& table);
// Plain-text score table with a trailing Rank column.
std::string render_rank_table(const ScoreTable& table, std::span<const MethodRank> ranks);

struct SweepPoint {
  double p = 0.0;
  std::size_t pairs = 0;
  double accuracy = 0.0;
};

// For each p: subset(set, p, subset_seed), train unless the subset is empty,
// and score argmax accuracy on `eval_set`. Points come back ordered by p.
std::vector<SweepPoint> subset_sweep(const SelfCorSet& set, std::span<const MCQSample> eval_set,
                                     std::span<const double> p_grid, const DPOConfig& config,
                                     std::uint64_t subset_seed);

std::string serialize_sweep_csv(std::span<const SweepPoint> points);

struct EvalReport {
  std::optional<TransitionCounts> types;
  std::vector<double> turn_accuracy;
  std::vector<MethodRank> ranks;
  std::optional<ScoreTable> table;
  std::vector<SweepPoint> sweep;
  // accuracy of a trained policy on the eval split, when one was supplied
  std::optional<double> policy_accuracy;
};

std::string serialize_report_json(const EvalReport& report);
std::string render_report_text(const EvalReport& report);

}  // namespace scl
