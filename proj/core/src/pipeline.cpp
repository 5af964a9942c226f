// SPDX-License-Identifier: Apache-2.0

#include "scl/pipeline.hpp"

#include <algorithm>

#include "codec.hpp"
#include "scl/http_backend.hpp"
#include "scl/io.hpp"
#include "scl/prefset.hpp"
#include "scl/trace.hpp"

namespace scl {

using codec::json;

namespace {

std::filesystem::path prepare_output(const PipelineConfig& config) {
  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  if (ec) throw DataError("cannot create output directory " + config.output_dir.string() + ": " + ec.message());
  write_file_atomic(config.output_dir / "config.resolved.json", resolved_config_json(config));
  return config.output_dir;
}

void sort_samples(std::vector<MCQSample>& v) {
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
}

std::string_view kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::Usage: return "usage";
    case ErrorKind::Data: return "data";
    case ErrorKind::Backend: return "backend";
  }
  return "backend";
}

}  // namespace

PipelineSplits load_splits(const PipelineConfig& config) {
  PipelineSplits out;
  std::vector<MCQSample> all;
  for (const auto& spec : config.corpora) {
    auto corpus = load_corpus(spec.path);
    auto split = split_eval_build(corpus, spec.eval_count, config.split_seed);
    std::move(split.eval_set.begin(), split.eval_set.end(), std::back_inserter(out.eval_set));
    std::move(split.build_set.begin(), split.build_set.end(), std::back_inserter(out.build_set));
    std::move(corpus.begin(), corpus.end(), std::back_inserter(all));
  }
  out.index = index_by_id(all);
  sort_samples(out.eval_set);
  sort_samples(out.build_set);
  return out;
}

std::unique_ptr<ModelBackend> make_backend(const PipelineConfig& config) {
  if (config.backend.kind == BackendKind::Scripted)
    return std::make_unique<ScriptedBackend>(load_fixture(config.backend.fixture));
  return std::make_unique<HttpBackend>(config.backend.http);
}

SelfcorrectOutput cmd_selfcorrect(const PipelineConfig& config, SplitChoice split, ModelBackend* backend) {
  const auto splits = load_splits(config);
  std::unique_ptr<ModelBackend> owned;
  if (backend == nullptr) {
    owned = make_backend(config);
    backend = owned.get();
  }
  const auto out_dir = prepare_output(config);

  const auto& samples = split == SplitChoice::Build ? splits.build_set : splits.eval_set;
  auto batch = run_batch(*backend, samples, config.selfcorrect, config.generation, config.parallelism);

  Trace trace;
  trace.header.backend = backend->name();
  trace.header.settings = config.generation;
  trace.header.prompt_id = config.selfcorrect.prompt_id;
  trace.header.k_turns = config.selfcorrect.k_turns;
  trace.records = std::move(batch.records);

  SelfcorrectOutput out;
  out.trace = out_dir / "trace.jsonl";
  out.errors = out_dir / "selfcorrect_errors.json";
  out.records = trace.records.size();
  write_trace(trace, out.trace);

  json failures = json::array();
  for (const auto& f : batch.failures)
    failures.push_back(json{{"sample_id", f.sample_id},
                            {"turn", f.turn},
                            {"kind", std::string(kind_name(f.kind))},
                            {"message", f.message}});
  json report{{"failed", batch.failures.size()}, {"succeeded", out.records}, {"failures", std::move(failures)}};
  write_file_atomic(out.errors, report.dump(2) + "\n");
  out.failures = std::move(batch.failures);
  return out;
}

std::filesystem::path cmd_build(const PipelineConfig& config, const std::filesystem::path& trace_path) {
  const auto trace = read_trace(trace_path);
  const auto splits = load_splits(config);
  auto set = build_preference_pairs(trace.records, splits.index, trace.header.settings.model_id, config.split_seed);
  set.meta.prompt_id = trace.header.prompt_id;
  set.meta.rules_version = trace.header.rules_version;
  const auto out_dir = prepare_output(config);
  const auto path = out_dir / "selfcorset.jsonl";
  write_selfcorset(set, path);
  return path;
}

TrainOutput cmd_train(const PipelineConfig& config, const std::filesystem::path& selfcorset) {
  const auto set = read_selfcorset(selfcorset);
  if (set.pairs.empty()) throw DataError(selfcorset.string() + ": SelfCorSet has no pairs to train on");
  auto result = train(set, config.dpo);
  const auto out_dir = prepare_output(config);
  TrainOutput out;
  out.policy = out_dir / "policy.json";
  out.report = out_dir / "train_report.json";
  write_policy(result.policy, config.dpo, out.policy);
  write_file_atomic(out.report, serialize_train_report(result.report));
  out.train_report = std::move(result.report);
  return out;
}

namespace {
void write_report(const std::filesystem::path& dir, const EvalReport& report) {
  write_file_atomic(dir / "report.json", serialize_report_json(report));
  write_file_atomic(dir / "report.txt", render_report_text(report));
}
}  // namespace

EvalReport cmd_evaluate(const PipelineConfig& config, const EvaluateInputs& inputs) {
  if (!inputs.trace && !inputs.scores && !inputs.policy && !inputs.selfcorset)
    throw UsageError("evaluate needs at least one of --trace, --scores, --policy, --set");
  EvalReport report;
  std::optional<PipelineSplits> splits;
  auto eval_split = [&]() -> const std::vector<MCQSample>& {
    if (!splits) splits = load_splits(config);
    if (splits->eval_set.empty()) throw DataError("evaluation split is empty (eval_count = 0?)");
    return splits->eval_set;
  };

  if (inputs.trace) {
    const auto trace = read_trace(*inputs.trace);
    report.types = type_distribution(trace.records);
    if (!trace.records.empty()) report.turn_accuracy = multi_turn_report(trace.records);
  }
  if (inputs.scores) {
    auto table = parse_score_table_csv(read_file(*inputs.scores));
    report.ranks = average_rank(table, inputs.rank_ties);
    report.table = std::move(table);
  }
  if (inputs.policy) {
    const auto [policy, cfg] = read_policy(*inputs.policy);
    report.policy_accuracy = policy_accuracy(policy, eval_split());
  }
  if (inputs.selfcorset) {
    const auto set = read_selfcorset(*inputs.selfcorset);
    report.sweep = subset_sweep(set, eval_split(), config.sweep_grid, config.dpo, config.subset_seed);
  }

  const auto out_dir = prepare_output(config);
  write_report(out_dir, report);
  if (!report.ranks.empty()) {
    std::string csv = "method,mean_rank\n";
    for (const auto& r : report.ranks) csv += r.method + "," + format_fixed(r.mean_rank, 2) + "\n";
    write_file_atomic(out_dir / "ranks.csv", csv);
  }
  if (!report.sweep.empty()) write_file_atomic(out_dir / "sweep.csv", serialize_sweep_csv(report.sweep));
  return report;
}

EvalReport cmd_sweep(const PipelineConfig& config, const std::filesystem::path& selfcorset) {
  EvaluateInputs in;
  in.selfcorset = selfcorset;
  return cmd_evaluate(config, in);
}

}  // namespace scl
