// SPDX-License-Identifier: Apache-2.0
//
// Multiple-choice corpora: the sample type, validation, newline-delimited
// loading, and the seeded evaluation/construction split.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace scl {

enum class ImageKind { Path, Url, Base64 };

std::string_view to_string(ImageKind kind);
ImageKind image_kind_from_string(std::string_view s);

struct ImageRef {
  ImageKind kind = ImageKind::Path;
  std::string value;

  bool operator==(const ImageRef&) const = default;
};

struct Choice {
  std::string label;
  std::string text;

  bool operator==(const Choice&) const = default;
};

struct MCQSample {
  std::string id;
  std::string source;
  std::string question;
  ImageRef image;
  std::vector<Choice> choices;
  std::string answer_key;

  std::vector<std::string> labels() const;
  const Choice* find_choice(std::string_view label) const;

  bool operator==(const MCQSample&) const = default;
};

// Returns the sample unchanged when every invariant holds; otherwise throws
// ValidationError listing each violation ("fewer than 2 choices",
// "answer_key not among labels", "duplicate label 'X'", "empty label at
// choice N", "empty id").
const MCQSample& validate_sample(const MCQSample& sample);
std::vector<std::string> sample_violations(const MCQSample& sample);

// One JSON object per line (blank lines are skipped). Errors name the 1-based
// record index and the offending field; duplicate ids are rejected.
std::vector<MCQSample> load_corpus(const std::filesystem::path& path);
std::vector<MCQSample> parse_corpus(std::string_view text);
std::string serialize_corpus(const std::vector<MCQSample>& samples);

struct CorpusSplit {
  std::vector<MCQSample> eval_set;
  std::vector<MCQSample> build_set;
  std::uint64_t seed = 0;
  std::size_t eval_count = 0;
};

// Fisher-Yates over record indices (see rng.hpp), the first
// min(eval_count, n) indices go to eval_set; both halves sorted by id.
CorpusSplit split_eval_build(const std::vector<MCQSample>& corpus, std::size_t eval_count,
                             std::uint64_t seed);

using CorpusIndex = std::map<std::string, MCQSample, std::less<>>;
CorpusIndex index_by_id(const std::vector<MCQSample>& samples);

}  // namespace scl
