// SPDX-License-Identifier: Apache-2.0
//
// Synthetic MCQ world and scripted model behaviour, for demos and tests.
//
// Every question asks for the color of one of ten objects; each object has
// its own color, so the right answer is learnable from (object, color)
// co-occurrence.
// Responses are rendered from a handful of templates covering the answer
// styles the extraction rules handle.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "scl/corpus.hpp"
#include "scl/gateway.hpp"
#include "scl/grading.hpp"
#include "scl/prefset.hpp"

namespace scl {

// `count` samples with ids "syn-00000".., four color choices each. Roughly one
// in eight samples uses numeric labels "0".."3" instead of A-D.
std::vector<MCQSample> synthetic_corpus(std::size_t count, std::uint64_t seed, std::string source = "synthetic");

// What the scripted model says at one turn.
enum class Outcome { Correct, Wrong, Unparseable };

// Renders a response choosing the answer key (Correct), a non-key label
// (Wrong), or no label at all. `variant` picks the template; `turn` > 0 adds
// a revision preamble.
std::string render_response(const MCQSample& sample, Outcome outcome, std::uint64_t variant, int turn);

// Fixture entries for every (sample, turn) following outcomes[sample][turn].
ScriptedFixture fixture_from_outcomes(const std::vector<MCQSample>& samples,
                                      const std::vector<std::vector<Outcome>>& outcomes, std::uint64_t seed);

// Outcomes for (IR, RR) that realize `type`. Undetermined uses an
// unparseable RR.
std::vector<Outcome> outcomes_for(TransitionType type);

struct ScriptedModelProfile {
  // P(initial response correct)
  double initial_accuracy = 0.5;
  // P(stay correct | correct) at each refinement turn
  double keep_correct = 0.6;
  // P(become correct | wrong) at each refinement turn
  double fix_wrong = 0.5;
  // P(response unparseable), applied per response
  double unparseable = 0.03;
  int k_turns = 1;
};

// Random per-sample trajectories; each sample's draws depend only on its id
// and `seed`, not on the sample order.
ScriptedFixture synthetic_fixture(const std::vector<MCQSample>& samples, const ScriptedModelProfile& profile,
                                  std::uint64_t seed);

// Type 2 pairs without going through a model: pairs_per_object pairs for
// each of the ten objects. Each object is always confused with the same wrong
// color and label positions rotate, so color and label counts balance across
// the set and the only consistent signal is (object, correct color).
SelfCorSet synthetic_selfcorset(std::size_t pairs_per_object, std::uint64_t seed);

// Writes corpus.jsonl, fixture.jsonl and a scripted-backend config.json into
// `dir` and returns the config path. The config's DPO settings are tuned for
// this world: learning rate 30, 30 epochs.
std::filesystem::path write_synthetic_world(const std::filesystem::path& dir, std::size_t samples,
                                            std::size_t eval_count, std::uint64_t seed,
                                            const ScriptedModelProfile& profile = {});

}  // namespace scl
