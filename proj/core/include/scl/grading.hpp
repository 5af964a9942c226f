// SPDX-License-Identifier: Apache-2.0
//
// Answer extraction from free-form model text, grading, and the IR -> RR
// correctness transition.
//
// Extraction rules, tried in order; the first rule that yields a label wins.
//
//   R1 marker        A label opening a bold span (**X** or __X__), or right
//                    after "answer is" / "answer:" (case-insensitive), skipping
//                    blanks and the characters * _ ( [ " ' :. Among all such
//                    hits the one closest to the end of the text wins.
//   R2 choice line   A line that starts (after blanks and * _ > - #) with
//                    "<label>." or "<label>:" followed by text that is a
//                    prefix of that choice's text or extends it. Last such
//                    line wins.
//   R3 standalone    Labels occurring as standalone tokens in their exact
//                    case; fires only when exactly one distinct label does.
//   R4 choice text   The full text of exactly one choice occurs in the
//                    response (case-insensitive, word-delimited).
//
// Label comparison in R1 and R2 is ASCII case-insensitive. The returned label
// is always the spelling from the choice list.

#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scl/corpus.hpp"

namespace scl {

inline constexpr std::string_view kExtractionRulesVersion = "scl-extract/1";

// A choice label, or std::nullopt for "unparseable".
using ParsedLabel = std::optional<std::string>;

enum class ExtractionRule { Marker = 1, ChoiceLine = 2, Standalone = 3, ChoiceText = 4 };

struct Extraction {
  ParsedLabel label;
  std::optional<ExtractionRule> rule;
};

Extraction extract_choice_detailed(std::string_view response, std::span<const Choice> choices);
ParsedLabel extract_choice(std::string_view response, std::span<const Choice> choices);
// Labels only: R2 and R4 need choice texts and never fire.
ParsedLabel extract_choice(std::string_view response, std::span<const std::string> labels);

bool grade(const ParsedLabel& parsed, std::string_view answer_key);

enum class TransitionType { Type1, Type2, Type3, Type4, Undetermined };

std::string_view to_string(TransitionType t);
TransitionType transition_from_string(std::string_view s);

// correct->correct Type1, incorrect->correct Type2, correct->incorrect Type3,
// incorrect->incorrect Type4; Undetermined if either side is unparseable.
TransitionType classify_transition(const ParsedLabel& ir, const ParsedLabel& rr, std::string_view answer_key);

// Count per TransitionType, indexed by the enum.
struct TransitionCounts {
  std::array<std::size_t, 5> by_type{};

  std::size_t& operator[](TransitionType t) { return by_type[static_cast<std::size_t>(t)]; }
  std::size_t operator[](TransitionType t) const { return by_type[static_cast<std::size_t>(t)]; }
  std::size_t total() const;

  bool operator==(const TransitionCounts&) const = default;
};

inline constexpr std::array<TransitionType, 5> kAllTransitions = {
    TransitionType::Type1, TransitionType::Type2, TransitionType::Type3, TransitionType::Type4,
    TransitionType::Undetermined};

}  // namespace scl
