// SPDX-License-Identifier: Apache-2.0
//
// The pipeline stages behind the scl command-line tool. Stages talk to each
// other only through files under PipelineConfig::output_dir:
//
//   selfcorrect -> trace.jsonl (+ selfcorrect_errors.json)
//   build       -> selfcorset.jsonl
//   train       -> policy.json, train_report.json
//   evaluate    -> report.json, report.txt (+ ranks.csv, sweep.csv)
//   sweep       -> sweep.csv, report.json, report.txt
//
// Every stage also writes config.resolved.json.

#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "scl/config.hpp"
#include "scl/corpus.hpp"
#include "scl/evalkit.hpp"
#include "scl/gateway.hpp"
#include "scl/selfcorrect.hpp"

namespace scl {

struct PipelineSplits {
  std::vector<MCQSample> eval_set;
  std::vector<MCQSample> build_set;
  CorpusIndex index;
};

// Loads every configured corpus and splits each with split_seed. Both halves
// are merged across corpora and sorted by id.
PipelineSplits load_splits(const PipelineConfig& config);

std::unique_ptr<ModelBackend> make_backend(const PipelineConfig& config);

enum class SplitChoice { Build, Eval };

struct SelfcorrectOutput {
  std::filesystem::path trace;
  std::filesystem::path errors;
  std::size_t records = 0;
  std::vector<SampleFailure> failures;
};

// `backend` overrides the configured one when non-null.
SelfcorrectOutput cmd_selfcorrect(const PipelineConfig& config, SplitChoice split = SplitChoice::Build,
                                  ModelBackend* backend = nullptr);

std::filesystem::path cmd_build(const PipelineConfig& config, const std::filesystem::path& trace);

struct TrainOutput {
  std::filesystem::path policy;
  std::filesystem::path report;
  TrainReport train_report;
};

TrainOutput cmd_train(const PipelineConfig& config, const std::filesystem::path& selfcorset);

struct EvaluateInputs {
  std::optional<std::filesystem::path> trace;
  std::optional<std::filesystem::path> scores;
  std::optional<std::filesystem::path> policy;
  // With a SelfCorSet, evaluate also runs the subset sweep.
  std::optional<std::filesystem::path> selfcorset;
  TieRule rank_ties = TieRule::Fractional;
};

EvalReport cmd_evaluate(const PipelineConfig& config, const EvaluateInputs& inputs);
EvalReport cmd_sweep(const PipelineConfig& config, const std::filesystem::path& selfcorset);

}  // namespace scl
