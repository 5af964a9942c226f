// SPDX-License-Identifier: Apache-2.0

#include "scl/selfcorrect.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <optional>
#include <thread>

namespace scl {

namespace {

constexpr std::string_view kCriticalPrompt =
    "Review your previous answer and find problems with your answer. Based on the problems you found, improve your "
    "answer.";
constexpr std::string_view kComprehensiveDetailPrompt =
    "Review your previous answer and ensure that all relevant aspects of the image have been considered. Are there "
    "any elements or details that you missed? Based on your review, improve your answer.";
constexpr std::string_view kContextualUnderstandingPrompt =
    "Review your contextual understanding of the image. Have you correctly interpreted the overall context and "
    "purpose of the scene? Based on your review, improve your answer.";
constexpr std::string_view kSceneAnalysisPrompt =
    "Review your answer and ensure that your understanding of the image is comprehensive and detailed. Are there any "
    "aspects of the scene that you have omitted or misinterpreted? Based on your review, improve your answer.";

}  // namespace

std::string_view to_string(CorrectionPromptId id) {
  switch (id) {
    case CorrectionPromptId::SP: return "SP";
    case CorrectionPromptId::CP: return "CP";
    case CorrectionPromptId::VP1: return "VP1";
    case CorrectionPromptId::VP2: return "VP2";
    case CorrectionPromptId::VP3: return "VP3";
  }
  return "SP";
}

CorrectionPromptId prompt_id_from_string(std::string_view s) {
  if (s == "SP") return CorrectionPromptId::SP;
  if (s == "CP") return CorrectionPromptId::CP;
  if (s == "VP1" || s == "VP-1") return CorrectionPromptId::VP1;
  if (s == "VP2" || s == "VP-2") return CorrectionPromptId::VP2;
  if (s == "VP3" || s == "VP-3") return CorrectionPromptId::VP3;
  throw DataError("unknown prompt id \"" + std::string(s) + "\"");
}

std::string standard_prompt_text(const MCQSample& sample) {
  std::string text = sample.question;
  for (const auto& c : sample.choices) {
    text += '\n';
    text += c.label;
    text += ". ";
    text += c.text;
  }
  text += '\n';
  text += kStandardAnswerInstruction;
  return text;
}

ChatTurn render_standard_prompt(const MCQSample& sample) {
  return ChatTurn{Role::User, {ImagePart{sample.image}, TextPart{standard_prompt_text(sample)}}};
}

std::string_view correction_prompt_text(CorrectionPromptId id) {
  switch (id) {
    case CorrectionPromptId::CP: return kCriticalPrompt;
    case CorrectionPromptId::VP1: return kComprehensiveDetailPrompt;
    case CorrectionPromptId::VP2: return kContextualUnderstandingPrompt;
    case CorrectionPromptId::VP3: return kSceneAnalysisPrompt;
    case CorrectionPromptId::SP: break;
  }
  throw UsageError("SP is the initial-turn prompt and cannot be used for refinement");
}

void grade_record(SelfCorrectionRecord& record, const MCQSample& sample) {
  record.answer_key = sample.answer_key;
  record.parsed_labels.clear();
  record.correctness.clear();
  for (const auto& response : record.responses) {
    auto parsed = extract_choice(response, sample.choices);
    record.correctness.push_back(grade(parsed, sample.answer_key));
    record.parsed_labels.push_back(std::move(parsed));
  }
  record.transition = record.parsed_labels.size() >= 2
                          ? classify_transition(record.parsed_labels[0], record.parsed_labels[1], sample.answer_key)
                          : TransitionType::Undetermined;
}

void validate_options(const SelfCorrectionOptions& options) {
  if (options.prompt_id == CorrectionPromptId::SP)
    throw UsageError("SP is the initial-turn prompt and cannot be used for refinement");
  if (options.k_turns < 1) throw UsageError("k_turns must be at least 1");
  if (options.k_turns > kMaxTurns && !options.allow_extended_turns)
    throw UsageError("k_turns " + std::to_string(options.k_turns) + " exceeds " + std::to_string(kMaxTurns) +
                     " without allow_extended_turns");
}

SampleRunError::SampleRunError(ErrorKind kind, std::string sample_id, int turn, const std::string& cause)
    : Error(kind, "sample \"" + sample_id + "\" turn " + std::to_string(turn) + ": " + cause),
      sample_id_(std::move(sample_id)),
      turn_(turn),
      cause_(cause) {}

SelfCorrectionRecord run_intrinsic_self_correction(ModelBackend& model, const MCQSample& sample,
                                                   const SelfCorrectionOptions& options,
                                                   const GenerationSettings& settings) {
  validate_options(options);
  const auto refinement = correction_prompt_text(options.prompt_id);

  SelfCorrectionRecord record;
  record.sample_id = sample.id;
  record.prompt_id = options.prompt_id;

  Conversation conversation;
  conversation.sample_id = sample.id;
  conversation.turns.push_back(render_standard_prompt(sample));

  for (int turn = 0; turn <= options.k_turns; ++turn) {
    if (turn > 0) conversation.turns.push_back(ChatTurn::user_text(std::string(refinement)));
    conversation.turn_index = turn;
    std::string reply;
    try {
      reply = model.complete(conversation, settings);
    } catch (const Error& e) {
      throw SampleRunError(e.kind(), sample.id, turn, e.what());
    } catch (const std::exception& e) {
      throw SampleRunError(ErrorKind::Backend, sample.id, turn, e.what());
    }
    conversation.turns.push_back(ChatTurn::assistant(reply));
    record.responses.push_back(std::move(reply));
  }

  grade_record(record, sample);
  return record;
}

BatchResult run_batch(ModelBackend& model, const std::vector<MCQSample>& samples,
                      const SelfCorrectionOptions& options, const GenerationSettings& settings, int parallelism) {
  validate_options(options);
  if (parallelism < 1) throw UsageError("parallelism must be positive");

  std::vector<std::optional<SelfCorrectionRecord>> slots(samples.size());
  std::vector<std::optional<SampleFailure>> failed(samples.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < samples.size(); i = next.fetch_add(1)) {
      try {
        slots[i] = run_intrinsic_self_correction(model, samples[i], options, settings);
      } catch (const SampleRunError& e) {
        failed[i] = SampleFailure{e.sample_id(), e.turn(), e.kind(), e.cause()};
      } catch (const std::exception& e) {
        failed[i] = SampleFailure{samples[i].id, 0, ErrorKind::Backend, e.what()};
      }
    }
  };

  const auto n_threads = std::min<std::size_t>(static_cast<std::size_t>(parallelism), samples.size());
  {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  BatchResult result;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (slots[i]) result.records.push_back(std::move(*slots[i]));
    if (failed[i]) result.failures.push_back(std::move(*failed[i]));
  }
  std::sort(result.records.begin(), result.records.end(),
            [](const auto& a, const auto& b) { return a.sample_id < b.sample_id; });
  std::sort(result.failures.begin(), result.failures.end(),
            [](const auto& a, const auto& b) { return a.sample_id < b.sample_id; });
  return result;
}

}  // namespace scl
