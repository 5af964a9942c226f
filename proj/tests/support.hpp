// SPDX-License-Identifier: Apache-2.0
//
// Helpers shared by the unit tests and the acceptance binary.

#pragma once

#include <atomic>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include "scl/corpus.hpp"
#include "scl/gateway.hpp"
#include "scl/grading.hpp"
#include "scl/synthetic.hpp"

namespace scl::testing {

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("scl-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline MCQSample make_sample(std::string id, std::string key,
                             std::vector<std::pair<std::string, std::string>> choices,
                             std::string question = "How many apples are on the table?") {
  MCQSample s;
  s.id = std::move(id);
  s.source = "unit";
  s.question = std::move(question);
  s.image = ImageRef{ImageKind::Url, "https://example.invalid/img.png"};
  for (auto& [l, t] : choices) s.choices.push_back(Choice{l, t});
  s.answer_key = std::move(key);
  return s;
}

inline MCQSample abcd_sample(std::string id, std::string key) {
  return make_sample(std::move(id), std::move(key), {{"A", "One"}, {"B", "Three"}, {"C", "Two"}, {"D", "Four"}});
}

// A synthetic corpus plus a fixture whose (IR, RR) outcomes realize exactly
// the requested number of records per transition type, in sample-id order.
struct TransitionFixture {
  std::vector<MCQSample> samples;
  ScriptedFixture fixture;
};

inline TransitionFixture transition_fixture(std::initializer_list<std::pair<TransitionType, std::size_t>> plan,
                                            std::uint64_t seed = 11) {
  std::size_t n = 0;
  for (const auto& [t, c] : plan) n += c;
  TransitionFixture out;
  out.samples = synthetic_corpus(n, seed);
  std::vector<std::vector<Outcome>> outcomes;
  for (const auto& [t, c] : plan)
    for (std::size_t i = 0; i < c; ++i) outcomes.push_back(outcomes_for(t));
  out.fixture = fixture_from_outcomes(out.samples, outcomes, seed);
  return out;
}

}  // namespace scl::testing
