// SPDX-License-Identifier: Apache-2.0

#include "scl/config.hpp"

#include "codec.hpp"
#include "scl/io.hpp"

namespace scl {

using codec::json;

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

void require_existing(const std::filesystem::path& p, std::string_view what) {
  if (!std::filesystem::exists(p)) throw DataError(std::string(what) + " not found: " + p.string());
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  return it == j.end() ? fallback : it->get<T>();
}

std::uint64_t require_seed(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number_unsigned())
    throw DataError(where + "\"" + key + "\" must be given explicitly as a non-negative integer");
  return it->get<std::uint64_t>();
}

}  // namespace

PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("config: malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw DataError("config must be a JSON object");

  PipelineConfig c;
  try {
    const auto& corpora = codec::require(j, "corpora");
    if (!corpora.is_array() || corpora.empty()) throw DataError("config: \"corpora\" must be a non-empty array");
    for (const auto& entry : corpora) {
      CorpusSpec spec;
      spec.path = resolve(base_dir, codec::require_string(entry, "path"));
      spec.eval_count = get_or<std::size_t>(entry, "eval_count", 500);
      require_existing(spec.path, "corpus file");
      c.corpora.push_back(std::move(spec));
    }

    const auto& backend = codec::require(j, "backend");
    const auto kind = codec::require_string(backend, "kind");
    if (kind == "scripted") {
      c.backend.kind = BackendKind::Scripted;
      c.backend.fixture = resolve(base_dir, codec::require_string(backend, "fixture"));
      require_existing(c.backend.fixture, "fixture file");
    } else if (kind == "http") {
      c.backend.kind = BackendKind::Http;
      auto& h = c.backend.http;
      h.base_url = codec::require_string(backend, "base_url");
      h.api_key_env = get_or<std::string>(backend, "api_key_env", h.api_key_env);
      h.timeout = std::chrono::milliseconds(get_or<long long>(backend, "timeout_ms", h.timeout.count()));
      h.max_retries = get_or<int>(backend, "max_retries", h.max_retries);
      h.backoff = std::chrono::milliseconds(get_or<long long>(backend, "backoff_ms", h.backoff.count()));
      h.parallelism = get_or<int>(backend, "parallelism", h.parallelism);
    } else {
      throw DataError("config: backend kind must be \"scripted\" or \"http\"");
    }

    if (auto g = j.find("generation"); g != j.end()) {
      c.generation.model_id = get_or<std::string>(*g, "model_id", "");
      c.generation.temperature = get_or<double>(*g, "temperature", 0.0);
      c.generation.max_tokens = get_or<int>(*g, "max_tokens", 512);
    }
    if (c.generation.model_id.empty()) throw DataError("config: generation.model_id is required");
    if (c.generation.temperature < 0.0) throw DataError("config: generation.temperature must be non-negative");
    if (c.generation.max_tokens < 1) throw DataError("config: generation.max_tokens must be positive");

    c.selfcorrect.prompt_id = prompt_id_from_string(get_or<std::string>(j, "prompt_id", "VP1"));
    c.selfcorrect.k_turns = get_or<int>(j, "k_turns", kDefaultTurns);
    c.selfcorrect.allow_extended_turns = get_or<bool>(j, "allow_extended_turns", false);
    validate_options(c.selfcorrect);
    c.parallelism = get_or<int>(j, "parallelism", 4);
    if (c.parallelism < 1) throw DataError("config: parallelism must be positive");

    c.split_seed = require_seed(j, "split_seed", "config: ");
    c.subset_seed = require_seed(j, "subset_seed", "config: ");

    const auto& dpo = codec::require(j, "dpo");
    c.dpo.beta = get_or<double>(dpo, "beta", c.dpo.beta);
    c.dpo.learning_rate = get_or<double>(dpo, "learning_rate", c.dpo.learning_rate);
    c.dpo.epochs = get_or<int>(dpo, "epochs", c.dpo.epochs);
    c.dpo.batch_size = get_or<int>(dpo, "batch_size", c.dpo.batch_size);
    c.dpo.seed = require_seed(dpo, "seed", "config: dpo.");
    c.dpo.dim = get_or<std::size_t>(dpo, "dim", c.dpo.dim);
    c.dpo.init_scale = get_or<double>(dpo, "init_scale", c.dpo.init_scale);
    c.dpo.distractors = get_or<std::vector<std::string>>(dpo, "distractors", {});
    validate_config(c.dpo);

    if (auto s = j.find("sweep"); s != j.end()) c.sweep_grid = get_or<std::vector<double>>(*s, "p_grid", c.sweep_grid);
    for (double p : c.sweep_grid)
      if (!(p >= 0.0 && p <= 1.0)) throw DataError("config: sweep.p_grid values must lie in [0, 1]");

    c.output_dir = resolve(base_dir, get_or<std::string>(j, "output_dir", "out"));
  } catch (const UsageError& e) {
    throw DataError(std::string("config: ") + e.what());
  } catch (const json::exception& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw DataError("config file not found: " + path.string());
  auto base = path.parent_path();
  if (base.empty()) base = ".";
  return parse_config(read_file(path), base);
}

void apply_seed_override(PipelineConfig& config, std::uint64_t seed) {
  config.split_seed = seed;
  config.subset_seed = seed;
  config.dpo.seed = seed;
}

std::string resolved_config_json(const PipelineConfig& c) {
  json corpora = json::array();
  for (const auto& s : c.corpora) corpora.push_back(json{{"path", s.path.string()}, {"eval_count", s.eval_count}});
  json backend;
  if (c.backend.kind == BackendKind::Scripted) {
    backend = json{{"kind", "scripted"}, {"fixture", c.backend.fixture.string()}};
  } else {
    const auto& h = c.backend.http;
    backend = json{{"kind", "http"},
                   {"base_url", h.base_url},
                   {"api_key_env", h.api_key_env},
                   {"timeout_ms", h.timeout.count()},
                   {"max_retries", h.max_retries},
                   {"backoff_ms", h.backoff.count()},
                   {"parallelism", h.parallelism}};
  }
  json j{{"corpora", std::move(corpora)},
         {"backend", std::move(backend)},
         {"generation",
          json{{"model_id", c.generation.model_id},
               {"temperature", c.generation.temperature},
               {"max_tokens", c.generation.max_tokens}}},
         {"prompt_id", std::string(to_string(c.selfcorrect.prompt_id))},
         {"standard_prompt_instruction", std::string(kStandardAnswerInstruction)},
         {"k_turns", c.selfcorrect.k_turns},
         {"allow_extended_turns", c.selfcorrect.allow_extended_turns},
         {"parallelism", c.parallelism},
         {"split_seed", c.split_seed},
         {"subset_seed", c.subset_seed},
         {"dpo",
          json{{"beta", c.dpo.beta},
               {"learning_rate", c.dpo.learning_rate},
               {"epochs", c.dpo.epochs},
               {"batch_size", c.dpo.batch_size},
               {"seed", c.dpo.seed},
               {"dim", c.dpo.dim},
               {"init_scale", c.dpo.init_scale},
               {"distractors", c.dpo.distractors},
               {"feature_hash", std::string(kFeatureHashId)}}},
         {"sweep", json{{"p_grid", c.sweep_grid}}},
         {"rules_version", std::string(kExtractionRulesVersion)},
         {"output_dir", c.output_dir.string()}};
  return j.dump(2) + "\n";
}

}  // namespace scl
