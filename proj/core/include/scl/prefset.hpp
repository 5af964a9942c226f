// SPDX-License-Identifier: Apache-2.0
//
// SelfCorSet: preference pairs mined from self-correction records. A Type 2
// record (incorrect -> correct) prefers its refined response, a Type 3 record
// (correct -> incorrect) its initial response; the other side is disfavored.
//
// File format (UTF-8, one JSON object per line, keys sorted):
//   line 1   {"format": "scl-selfcorset/1", "model_id", "prompt_id",
//             "rules_version", "seed", "counts": {"Type1".."Undetermined"},
//             "pairs": N}
//   line 2.. one PreferencePair per line, sorted by sample_id.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "scl/corpus.hpp"
#include "scl/grading.hpp"
#include "scl/selfcorrect.hpp"

namespace scl {

enum class PreferredOrigin { IR, RR };
std::string_view to_string(PreferredOrigin o);

struct PreferencePair {
  std::string sample_id;
  std::string source;
  std::string question;
  ImageRef image;
  std::vector<Choice> choices;
  std::string answer_key;
  std::string preferred;
  std::string disfavored;
  TransitionType transition = TransitionType::Type2;
  PreferredOrigin preferred_origin = PreferredOrigin::RR;
  CorrectionPromptId prompt_id = CorrectionPromptId::VP1;
  std::string model_id;

  bool operator==(const PreferencePair&) const = default;
};

// Empty when the pair satisfies every invariant.
std::vector<std::string> pair_violations(const PreferencePair& pair);

struct SelfCorSetMeta {
  std::string model_id;
  CorrectionPromptId prompt_id = CorrectionPromptId::VP1;
  std::string rules_version{kExtractionRulesVersion};
  std::uint64_t seed = 0;
  // Over all input records, including the skipped ones.
  TransitionCounts counts;

  bool operator==(const SelfCorSetMeta&) const = default;
};

struct SelfCorSet {
  SelfCorSetMeta meta;
  std::vector<PreferencePair> pairs;

  bool operator==(const SelfCorSet&) const = default;
};

// One pair per Type2/Type3 record from turns 0 and 1; Type1, Type4 and
// Undetermined records are only counted. Throws DataError for a sample_id
// missing from `samples` or repeated in `records`.
SelfCorSet build_preference_pairs(const std::vector<SelfCorrectionRecord>& records, const CorpusIndex& samples,
                                  const std::string& model_id, std::uint64_t seed);

std::string serialize_selfcorset(const SelfCorSet& set);
SelfCorSet parse_selfcorset(std::string_view text);
void write_selfcorset(const SelfCorSet& set, const std::filesystem::path& path);
SelfCorSet read_selfcorset(const std::filesystem::path& path);

// floor(p * n), with p * n nudged by 1e-9 so exact products are not lost to
// rounding (0.6 * 5 is 3).
std::size_t subset_size(std::size_t n, double p);

// Seeded shuffle, keep the first subset_size(N, p) pairs, re-sort by
// sample_id. For a fixed seed, smaller p gives a subset of larger p.
SelfCorSet subset(const SelfCorSet& set, double p, std::uint64_t seed);

}  // namespace scl
