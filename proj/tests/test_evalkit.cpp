// SPDX-License-Identifier: Apache-2.0

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>

#include "scl/errors.hpp"
#include "scl/evalkit.hpp"
#include "scl/io.hpp"
#include "scl/rng.hpp"
#include "support.hpp"

using namespace scl;

namespace {

ScoreTable load_table(const std::string& name) {
  return parse_score_table_csv(read_file(std::filesystem::path(SCL_TEST_DATA_DIR) / name));
}

// 1 + (# strictly better) + (# tied others) / 2, or 1 + (# strictly better).
double oracle_rank(const ScoreTable& t, std::size_t m, std::size_t b, TieRule ties) {
  double better = 0, tied = 0;
  for (std::size_t o = 0; o < t.methods.size(); ++o) {
    if (o == m) continue;
    if (t.scores[o][b] > t.scores[m][b]) ++better;
    if (t.scores[o][b] == t.scores[m][b]) ++tied;
  }
  return 1.0 + better + (ties == TieRule::Fractional ? tied / 2.0 : 0.0);
}

std::vector<double> oracle_mean_ranks(const ScoreTable& t, TieRule ties) {
  std::vector<double> out;
  for (std::size_t m = 0; m < t.methods.size(); ++m) {
    double sum = 0;
    for (std::size_t b = 0; b < t.benchmarks.size(); ++b) sum += oracle_rank(t, m, b, ties);
    out.push_back(sum / static_cast<double>(t.benchmarks.size()));
  }
  return out;
}

std::vector<std::string> displayed(const std::vector<MethodRank>& ranks) {
  std::vector<std::string> out;
  for (const auto& r : ranks) out.push_back(format_fixed(r.mean_rank, 2));
  return out;
}

SelfCorrectionRecord record_with(std::vector<bool> correct, TransitionType t = TransitionType::Type1) {
  SelfCorrectionRecord r;
  static int counter = 0;
  r.sample_id = "r" + std::to_string(counter++);
  r.correctness = std::move(correct);
  for (std::size_t i = 0; i < r.correctness.size(); ++i) r.responses.push_back("x");
  r.parsed_labels.assign(r.correctness.size(), std::nullopt);
  r.transition = t;
  return r;
}

ScoreTable random_table(std::size_t methods, std::size_t benchmarks, std::uint64_t seed) {
  Xoshiro256 rng(seed);
  ScoreTable t;
  for (std::size_t m = 0; m < methods; ++m) t.methods.push_back("m" + std::to_string(m));
  for (std::size_t b = 0; b < benchmarks; ++b) t.benchmarks.push_back("b" + std::to_string(b));
  for (std::size_t m = 0; m < methods; ++m) {
    t.scores.emplace_back();
    // coarse grid so ties are common
    for (std::size_t b = 0; b < benchmarks; ++b) t.scores.back().push_back(static_cast<double>(rng.bounded(6)) * 10.0);
  }
  return t;
}

}  // namespace

TEST(Accuracy, Examples) {
  std::vector<SelfCorrectionRecord> rs{record_with({true, true}), record_with({true, false}),
                                       record_with({false, true}), record_with({true, true})};
  EXPECT_DOUBLE_EQ(accuracy(rs, 0), 75.0);
  EXPECT_DOUBLE_EQ(accuracy(rs, 1), 75.0);
  std::vector<SelfCorrectionRecord> none{record_with({false, false}), record_with({false, false})};
  EXPECT_DOUBLE_EQ(accuracy(none, 0), 0.0);
  EXPECT_THROW(accuracy(std::span<const SelfCorrectionRecord>{}, 0), DataError);
  EXPECT_THROW(accuracy(rs, 2), DataError);

  std::reverse(rs.begin(), rs.end());
  EXPECT_DOUBLE_EQ(accuracy(rs, 0), 75.0);
}

TEST(Rank, MiniCpmRows) {
  const auto t = load_table("minicpm_scores.csv");
  EXPECT_EQ(t.methods, (std::vector<std::string>{"SP", "CP", "VP-1", "VP-2", "VP-3"}));
  EXPECT_THAT(displayed(average_rank(t)), ::testing::ElementsAre("1.17", "4.17", "3.00", "3.33", "3.33"));
}

TEST(Rank, InternLmRows) {
  const auto t = load_table("internlm_scores.csv");
  EXPECT_THAT(displayed(average_rank(t)), ::testing::ElementsAre("1.17", "4.83", "2.50", "3.00", "3.50"));
}

TEST(Rank, LlavaRowsDependOnTieRule) {
  // CP and VP-3 share a score on one benchmark
  const auto t = load_table("llava7b_scores.csv");
  EXPECT_THAT(displayed(average_rank(t, TieRule::Min)), ::testing::ElementsAre("1.00", "2.83", "2.33", "5.00", "3.67"));
  EXPECT_THAT(displayed(average_rank(t, TieRule::Fractional)),
              ::testing::ElementsAre("1.00", "2.92", "2.33", "5.00", "3.75"));
}

TEST(Rank, HandComputedTie) {
  ScoreTable t{{"x", "y"}, {"b1", "b2"}, {{50.0, 70.0}, {50.0, 60.0}}};
  EXPECT_THAT(column_ranks(t, 0), ::testing::ElementsAre(1.5, 1.5));
  EXPECT_THAT(column_ranks(t, 1), ::testing::ElementsAre(1.0, 2.0));
  const auto r = average_rank(t);
  EXPECT_DOUBLE_EQ(r[0].mean_rank, 1.25);
  EXPECT_DOUBLE_EQ(r[1].mean_rank, 1.75);
  EXPECT_THAT(column_ranks(t, 0, TieRule::Min), ::testing::ElementsAre(1.0, 1.0));
}

TEST(Rank, SingleMethod) {
  ScoreTable t{{"only"}, {"a", "b", "c"}, {{10.0, 20.0, 30.0}}};
  EXPECT_DOUBLE_EQ(average_rank(t)[0].mean_rank, 1.0);
}

TEST(Rank, AgreesWithCountingOracle) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto t = random_table(2 + seed % 6, 1 + seed % 5, seed);
    for (auto ties : {TieRule::Fractional, TieRule::Min}) {
      const auto want = oracle_mean_ranks(t, ties);
      const auto got = average_rank(t, ties);
      for (std::size_t m = 0; m < want.size(); ++m) EXPECT_NEAR(got[m].mean_rank, want[m], 1e-12);
    }
  }
}

TEST(Rank, ColumnSumsBoundsAndScaleInvariance) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto t = random_table(2 + seed % 7, 3, 1000 + seed);
    const double n = static_cast<double>(t.methods.size());
    for (std::size_t b = 0; b < t.benchmarks.size(); ++b) {
      const auto ranks = column_ranks(t, b);
      double sum = 0;
      for (double r : ranks) sum += r;
      EXPECT_DOUBLE_EQ(sum, n * (n + 1) / 2);
    }
    for (const auto& r : average_rank(t)) {
      EXPECT_GE(r.mean_rank, 1.0);
      EXPECT_LE(r.mean_rank, n);
    }
    const auto before = column_ranks(t, 1);
    for (auto& row : t.scores) row[1] *= 0.37;
    EXPECT_EQ(column_ranks(t, 1), before);
  }
}

TEST(Rank, InvalidTables) {
  EXPECT_THROW(validate_table(ScoreTable{}), DataError);
  EXPECT_THROW(validate_table(ScoreTable{{"a", "b"}, {"x"}, {{1.0}}}), DataError);
  EXPECT_THROW(validate_table(ScoreTable{{"a"}, {"x", "y"}, {{1.0}}}), DataError);
  EXPECT_THROW(validate_table(ScoreTable{{"a"}, {"x"}, {{101.0}}}), DataError);
  EXPECT_THROW(parse_score_table_csv("method,x,y\nSP,1.0\n"), DataError);
  EXPECT_THROW(parse_score_table_csv("method,x\nSP,abc\n"), DataError);
  EXPECT_THROW(tie_rule_from_string("dense"), UsageError);
}

TEST(Rank, DisplayRoundsHalfUp) {
  EXPECT_EQ(format_fixed(7.0 / 6.0), "1.17");
  EXPECT_EQ(format_fixed(2.5), "2.50");
  EXPECT_EQ(format_fixed(1.125), "1.13");
  EXPECT_EQ(format_fixed(17.5 / 6.0), "2.92");
  EXPECT_DOUBLE_EQ(round_half_up(0.005, 2), 0.01);
}

TEST(Rank, CsvRoundTrip) {
  const auto t = load_table("internlm_scores.csv");
  const auto back = parse_score_table_csv(serialize_score_table_csv(t));
  EXPECT_EQ(back.methods, t.methods);
  EXPECT_EQ(back.benchmarks, t.benchmarks);
  EXPECT_EQ(back.scores, t.scores);
}

TEST(Types, Distribution) {
  const auto tf = scl::testing::transition_fixture({{TransitionType::Type1, 10},
                                                    {TransitionType::Type2, 5},
                                                    {TransitionType::Type3, 7},
                                                    {TransitionType::Type4, 3}});
  ScriptedBackend backend(tf.fixture);
  const auto records = run_batch(backend, tf.samples, SelfCorrectionOptions{}, {}, 2).records;
  const auto d = type_distribution(records);
  EXPECT_EQ(d[TransitionType::Type1], 10u);
  EXPECT_EQ(d[TransitionType::Type2], 5u);
  EXPECT_EQ(d[TransitionType::Type3], 7u);
  EXPECT_EQ(d[TransitionType::Type4], 3u);
  EXPECT_EQ(d[TransitionType::Undetermined], 0u);
  EXPECT_EQ(d.total(), records.size());

  EXPECT_EQ(type_distribution(std::span<const SelfCorrectionRecord>{}).total(), 0u);
  std::vector<SelfCorrectionRecord> one{record_with({true, false}, TransitionType::Undetermined)};
  EXPECT_EQ(type_distribution(one)[TransitionType::Undetermined], 1u);
  EXPECT_EQ(type_distribution(one).total(), 1u);
}

TEST(MultiTurn, EngineeredDegradation) {
  // 20 samples, correct counts per turn 12, 10, 8, 9
  const auto samples = synthetic_corpus(20, 6);
  std::vector<std::vector<Outcome>> outcomes(20);
  const int per_turn[4] = {12, 10, 8, 9};
  for (int t = 0; t < 4; ++t)
    for (int i = 0; i < 20; ++i) outcomes[i].push_back(i < per_turn[t] ? Outcome::Correct : Outcome::Wrong);
  ScriptedBackend backend(fixture_from_outcomes(samples, outcomes, 6));
  SelfCorrectionOptions opts;
  opts.k_turns = 3;
  const auto records = run_batch(backend, samples, opts, {}, 3).records;
  EXPECT_THAT(multi_turn_report(records), ::testing::ElementsAre(60.0, 50.0, 40.0, 45.0));
}

TEST(MultiTurn, AllCorrectAndRagged) {
  std::vector<SelfCorrectionRecord> rs{record_with({true, true}), record_with({true, true})};
  EXPECT_THAT(multi_turn_report(rs), ::testing::ElementsAre(100.0, 100.0));
  rs.push_back(record_with({true, true, false}));
  EXPECT_THROW(multi_turn_report(rs), DataError);
}

TEST(Sweep, SixNestedPointsStartingUntrained) {
  const auto set = synthetic_selfcorset(4, 2);
  const auto eval = synthetic_corpus(60, 31);
  DPOConfig cfg;
  cfg.dim = 1024;
  cfg.learning_rate = 30.0;
  cfg.epochs = 5;
  const std::vector<double> grid{1.0, 0.0, 0.4, 0.2, 0.8, 0.6};
  const auto pts = subset_sweep(set, eval, grid, cfg, 7);
  ASSERT_EQ(pts.size(), 6u);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_DOUBLE_EQ(pts[i].p, 0.2 * static_cast<double>(i));
    EXPECT_EQ(pts[i].pairs, subset_size(set.pairs.size(), pts[i].p));
  }
  EXPECT_EQ(pts[0].pairs, 0u);
  EXPECT_DOUBLE_EQ(pts[0].accuracy, policy_accuracy(initial_policy(cfg), eval));
  const std::vector<double> bad{1.2};
  EXPECT_THROW(subset_sweep(set, eval, bad, cfg, 7), UsageError);
  EXPECT_THAT(serialize_sweep_csv(pts), ::testing::StartsWith("p,pairs,accuracy\n0,0,"));
}

TEST(Report, JsonAndTextCarryEverySection) {
  EvalReport r;
  r.types = TransitionCounts{{1, 2, 3, 4, 0}};
  r.turn_accuracy = {60.0, 50.0};
  r.table = load_table("minicpm_scores.csv");
  r.ranks = average_rank(*r.table);
  r.sweep = {SweepPoint{0.0, 0, 25.0}, SweepPoint{1.0, 10, 40.0}};
  const auto j = serialize_report_json(r);
  for (const char* key : {"type_distribution", "turn_accuracy", "average_rank", "subset_sweep", "score_table"})
    EXPECT_THAT(j, ::testing::HasSubstr(key));
  const auto text = render_report_text(r);
  EXPECT_THAT(text, ::testing::HasSubstr("| Rank"));
  EXPECT_THAT(text, ::testing::HasSubstr("1.17"));
  EXPECT_EQ(serialize_report_json(r), j);
}
