// SPDX-License-Identifier: Apache-2.0
//
// Pipeline configuration, one JSON document:
//
// {
//   "corpora":   [{"path": "data/corpus.jsonl", "eval_count": 500}],
//   "backend":   {"kind": "scripted", "fixture": "data/fixture.jsonl"}
//             |  {"kind": "http", "base_url": "http://localhost:8000/v1",
//                 "api_key_env": "SCL_API_KEY", "timeout_ms": 120000,
//                 "max_retries": 3, "backoff_ms": 500, "parallelism": 4},
//   "generation": {"model_id": "...", "temperature": 0, "max_tokens": 512},
//   "prompt_id": "VP1", "k_turns": 1, "allow_extended_turns": false,
//   "parallelism": 4,
//   "split_seed": 42, "subset_seed": 7,
//   "dpo": {"beta": 0.1, "learning_rate": 0.1, "epochs": 3, "batch_size": 8,
//           "seed": 0, "dim": 4096, "init_scale": 0.001, "distractors": []},
//   "sweep": {"p_grid": [0, 0.2, 0.4, 0.6, 0.8, 1.0]},
//   "output_dir": "out"
// }
//
// Relative paths resolve against the config file's directory. The three seeds
// are mandatory.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scl/dpo.hpp"
#include "scl/gateway.hpp"
#include "scl/http_backend.hpp"
#include "scl/selfcorrect.hpp"

namespace scl {

struct CorpusSpec {
  std::filesystem::path path;
  std::size_t eval_count = 500;
};

enum class BackendKind { Scripted, Http };

struct BackendSpec {
  BackendKind kind = BackendKind::Scripted;
  std::filesystem::path fixture;
  HttpBackendConfig http;
};

struct PipelineConfig {
  std::vector<CorpusSpec> corpora;
  BackendSpec backend;
  GenerationSettings generation;
  SelfCorrectionOptions selfcorrect;
  int parallelism = 4;
  std::uint64_t split_seed = 0;
  std::uint64_t subset_seed = 0;
  DPOConfig dpo;
  std::vector<double> sweep_grid{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  std::filesystem::path output_dir = "out";
};

// Throws DataError for unreadable or invalid documents, missing seeds, and
// referenced input files that do not exist.
PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);

// Replaces split, subset and DPO seeds.
void apply_seed_override(PipelineConfig& config, std::uint64_t seed);

// Fully resolved config as pretty JSON; written beside every command's output.
std::string resolved_config_json(const PipelineConfig& config);

}  // namespace scl
