// SPDX-License-Identifier: Apache-2.0
//
// scl: self-correction learning pipeline driver.
//
//   scl --config cfg.json selfcorrect [--split build|eval]
//   scl --config cfg.json build    --trace out/trace.jsonl
//   scl --config cfg.json train    --set out/selfcorset.jsonl
//   scl --config cfg.json evaluate [--trace T] [--scores S.csv] [--policy P] [--set SET]
//                                  [--rank-ties fractional|min]
//   scl --config cfg.json sweep    --set out/selfcorset.jsonl
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 backend error. Failures
// print one JSON object on stderr.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "scl/config.hpp"
#include "scl/errors.hpp"
#include "scl/pipeline.hpp"

namespace {

std::string json_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

int fail(scl::ErrorKind kind, const std::string& message) {
  const char* name = kind == scl::ErrorKind::Usage ? "usage" : kind == scl::ErrorKind::Data ? "data" : "backend";
  const int code = static_cast<int>(kind);
  std::cerr << "{\"error\":{\"kind\":\"" << name << "\",\"code\":" << code << ",\"message\":\""
            << json_escape(message) << "\"}}\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-correction learning pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed_override;
  app.add_option("--config", config_path, "Pipeline config (JSON)");
  app.add_option("--out", out_dir, "Output directory (overrides output_dir)");
  app.add_option("--seed-override", seed_override, "Replace split, subset and DPO seeds");

  auto* selfcorrect = app.add_subcommand("selfcorrect", "Run intrinsic self-correction and write trace.jsonl");
  std::string split = "build";
  selfcorrect->add_option("--split", split, "Which split to run on")->check(CLI::IsMember({"build", "eval"}));

  auto* build = app.add_subcommand("build", "Build selfcorset.jsonl from a trace");
  std::string trace_path;
  build->add_option("--trace", trace_path, "Trace file")->required();

  auto* train = app.add_subcommand("train", "Train the toy policy with DPO");
  std::string set_path;
  train->add_option("--set", set_path, "SelfCorSet file")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Write evaluation reports");
  std::string eval_trace, eval_scores, eval_policy, eval_set;
  evaluate->add_option("--trace", eval_trace, "Trace: transition types and per-turn accuracy");
  evaluate->add_option("--scores", eval_scores, "Score table CSV: average rank");
  evaluate->add_option("--policy", eval_policy, "Policy file: accuracy on the eval split");
  evaluate->add_option("--set", eval_set, "SelfCorSet: subset sweep over the configured p grid");
  std::string rank_ties = "fractional";
  evaluate->add_option("--rank-ties", rank_ties, "Tied scores in a rank column: fractional or min")
      ->check(CLI::IsMember({"fractional", "min"}));

  auto* sweep = app.add_subcommand("sweep", "Subset sweep over the configured p grid");
  std::string sweep_set;
  sweep->add_option("--set", sweep_set, "SelfCorSet file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(scl::ErrorKind::Usage, e.what());
  }

  try {
    scl::PipelineConfig config;
    if (!config_path.empty()) {
      config = scl::load_config(config_path);
    } else if (!app.got_subcommand(evaluate) || !eval_policy.empty() || !eval_set.empty()) {
      throw scl::UsageError("--config is required for this command");
    }
    if (!out_dir.empty()) config.output_dir = out_dir;
    if (seed_override) scl::apply_seed_override(config, *seed_override);

    if (app.got_subcommand(selfcorrect)) {
      auto out = scl::cmd_selfcorrect(config, split == "eval" ? scl::SplitChoice::Eval : scl::SplitChoice::Build);
      std::cout << "wrote " << out.trace.string() << " (" << out.records << " records, " << out.failures.size()
                << " failures)\n";
      if (out.records == 0 && !out.failures.empty())
        return fail(scl::ErrorKind::Backend, "every sample failed; see " + out.errors.string());
    } else if (app.got_subcommand(build)) {
      auto path = scl::cmd_build(config, trace_path);
      std::cout << "wrote " << path.string() << "\n";
    } else if (app.got_subcommand(train)) {
      auto out = scl::cmd_train(config, set_path);
      const auto& r = out.train_report;
      std::cout << "wrote " << out.policy.string() << " and " << out.report.string() << " (final loss "
                << (r.epoch_losses.empty() ? r.initial_loss : r.epoch_losses.back()) << ", positive margins "
                << r.positive_margin_fraction * 100.0 << "%)\n";
    } else if (app.got_subcommand(evaluate)) {
      scl::EvaluateInputs in;
      in.rank_ties = scl::tie_rule_from_string(rank_ties);
      if (!eval_trace.empty()) in.trace = eval_trace;
      if (!eval_scores.empty()) in.scores = eval_scores;
      if (!eval_policy.empty()) in.policy = eval_policy;
      if (!eval_set.empty()) in.selfcorset = eval_set;
      auto report = scl::cmd_evaluate(config, in);
      std::cout << scl::render_report_text(report);
    } else if (app.got_subcommand(sweep)) {
      auto report = scl::cmd_sweep(config, sweep_set);
      std::cout << scl::render_report_text(report);
    }
  } catch (const scl::Error& e) {
    return fail(e.kind(), e.what());
  } catch (const std::exception& e) {
    return fail(scl::ErrorKind::Data, e.what());
  }
  return 0;
}
