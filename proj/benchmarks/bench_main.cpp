// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "scl/dpo.hpp"
#include "scl/evalkit.hpp"
#include "scl/grading.hpp"
#include "scl/synthetic.hpp"

namespace {

void BM_ExtractChoice(benchmark::State& state) {
  const auto samples = scl::synthetic_corpus(64, 1);
  std::vector<std::string> responses;
  for (std::size_t i = 0; i < samples.size(); ++i)
    responses.push_back(scl::render_response(samples[i], i % 3 ? scl::Outcome::Correct : scl::Outcome::Wrong, i, i % 2));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(scl::extract_choice(responses[i], samples[i].choices));
    i = (i + 1) % samples.size();
  }
}
BENCHMARK(BM_ExtractChoice);

void BM_Featurize(benchmark::State& state) {
  const auto set = scl::synthetic_selfcorset(1, 1);
  const auto ctx = scl::context_text(set.pairs[0]);
  for (auto _ : state) benchmark::DoNotOptimize(scl::featurize(ctx, set.pairs[0].preferred, scl::kDefaultFeatureDim));
}
BENCHMARK(BM_Featurize);

void BM_DpoGradient(benchmark::State& state) {
  const auto set = scl::synthetic_selfcorset(static_cast<std::size_t>(state.range(0)), 1);
  scl::DPOConfig cfg;
  const auto theta = scl::initial_policy(cfg);
  const scl::ReferencePolicy ref(theta);
  const auto batch = scl::prepare_pairs(set.pairs, cfg.dim);
  for (auto _ : state) benchmark::DoNotOptimize(scl::dpo_gradient(theta, ref, batch, cfg.beta));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.size()));
}
BENCHMARK(BM_DpoGradient)->Arg(1)->Arg(8);

void BM_TrainEpoch(benchmark::State& state) {
  const auto set = scl::synthetic_selfcorset(10, 1);
  scl::DPOConfig cfg;
  cfg.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(scl::train(set, cfg));
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

void BM_AverageRank(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  scl::ScoreTable t;
  for (std::size_t m = 0; m < n; ++m) t.methods.push_back("m" + std::to_string(m));
  for (std::size_t b = 0; b < 6; ++b) t.benchmarks.push_back("b" + std::to_string(b));
  for (std::size_t m = 0; m < n; ++m) {
    t.scores.emplace_back();
    for (std::size_t b = 0; b < 6; ++b) t.scores.back().push_back(static_cast<double>((m * 37 + b * 11) % 100));
  }
  for (auto _ : state) benchmark::DoNotOptimize(scl::average_rank(t));
}
BENCHMARK(BM_AverageRank)->Arg(5)->Arg(100);

}  // namespace

BENCHMARK_MAIN();
