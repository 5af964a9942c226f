// SPDX-License-Identifier: Apache-2.0
//
// Two-stage intrinsic self-correction: the standard prompt produces the
// initial response (IR), then each refinement turn appends a correction prompt
// to the retained history and records the refined response (RR).

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "scl/corpus.hpp"
#include "scl/errors.hpp"
#include "scl/gateway.hpp"
#include "scl/grading.hpp"

namespace scl {

enum class CorrectionPromptId { SP, CP, VP1, VP2, VP3 };

std::string_view to_string(CorrectionPromptId id);
// Accepts "CP", "VP1" and the hyphenated "VP-1" spellings.
CorrectionPromptId prompt_id_from_string(std::string_view s);

// Appended to every standard prompt so answers can be graded.
inline constexpr std::string_view kStandardAnswerInstruction = "Answer with the option's letter/label.";

inline constexpr int kDefaultTurns = 1;
inline constexpr int kMaxTurns = 3;

// User turn: the image, then the question, one "<label>. <text>" line per
// choice, and the answer instruction, joined by newlines.
ChatTurn render_standard_prompt(const MCQSample& sample);
std::string standard_prompt_text(const MCQSample& sample);

// Refinement prompt text. Throws UsageError for SP.
std::string_view correction_prompt_text(CorrectionPromptId id);

struct SelfCorrectionRecord {
  std::string sample_id;
  std::string answer_key;
  CorrectionPromptId prompt_id = CorrectionPromptId::VP1;
  // Index 0 is IR, 1..K the refined responses.
  std::vector<std::string> responses;
  std::vector<ParsedLabel> parsed_labels;
  std::vector<bool> correctness;
  // IR vs RR1.
  TransitionType transition = TransitionType::Undetermined;

  std::size_t turns() const { return responses.size(); }
  bool operator==(const SelfCorrectionRecord&) const = default;
};

// Grades every response of `record` against `sample` and recomputes the
// transition. Used after inference and when re-grading a trace.
void grade_record(SelfCorrectionRecord& record, const MCQSample& sample);

struct SelfCorrectionOptions {
  CorrectionPromptId prompt_id = CorrectionPromptId::VP1;
  int k_turns = kDefaultTurns;
  // Permits k_turns > kMaxTurns.
  bool allow_extended_turns = false;
};

void validate_options(const SelfCorrectionOptions& options);

// A failed single-sample run. kind() is inherited from the cause.
class SampleRunError : public Error {
 public:
  SampleRunError(ErrorKind kind, std::string sample_id, int turn, const std::string& cause);
  const std::string& sample_id() const noexcept { return sample_id_; }
  int turn() const noexcept { return turn_; }
  const std::string& cause() const noexcept { return cause_; }

 private:
  std::string sample_id_;
  int turn_;
  std::string cause_;
};

SelfCorrectionRecord run_intrinsic_self_correction(ModelBackend& model, const MCQSample& sample,
                                                   const SelfCorrectionOptions& options,
                                                   const GenerationSettings& settings);

struct SampleFailure {
  std::string sample_id;
  int turn = 0;
  ErrorKind kind = ErrorKind::Backend;
  std::string message;

  bool operator==(const SampleFailure&) const = default;
};

struct BatchResult {
  // Sorted by sample_id.
  std::vector<SelfCorrectionRecord> records;
  // Sorted by sample_id.
  std::vector<SampleFailure> failures;
};

// Runs up to `parallelism` samples concurrently. Output order does not depend
// on scheduling.
BatchResult run_batch(ModelBackend& model, const std::vector<MCQSample>& samples,
                      const SelfCorrectionOptions& options, const GenerationSettings& settings, int parallelism);

}  // namespace scl
