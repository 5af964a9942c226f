// SPDX-License-Identifier: Apache-2.0

#include "scl/grading.hpp"

#include <algorithm>
#include <set>

#include "scl/errors.hpp"

namespace scl {

namespace {

char fold(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

bool word_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (u >= '0' && u <= '9') || (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z') || u == '_' || u >= 0x80;
}

bool iequal_at(std::string_view text, std::size_t pos, std::string_view needle) {
  if (needle.size() > text.size() - std::min(pos, text.size())) return false;
  for (std::size_t k = 0; k < needle.size(); ++k)
    if (fold(text[pos + k]) != fold(needle[k])) return false;
  return true;
}

bool boundary_before(std::string_view text, std::size_t pos, std::string_view needle) {
  return pos == 0 || needle.empty() || !word_char(needle.front()) || !word_char(text[pos - 1]);
}

bool boundary_after(std::string_view text, std::size_t end, std::string_view needle) {
  return end >= text.size() || needle.empty() || !word_char(needle.back()) || !word_char(text[end]);
}

// Longest label starting at `pos` (case-insensitive) that ends on a token
// boundary. Returns its index into `labels`.
std::optional<std::size_t> label_at(std::string_view text, std::size_t pos, std::span<const std::string> labels) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& l = labels[i];
    if (l.empty() || !iequal_at(text, pos, l) || !boundary_after(text, pos + l.size(), l)) continue;
    if (!best || l.size() > labels[*best].size()) best = i;
  }
  return best;
}

std::size_t skip(std::string_view text, std::size_t pos, std::string_view chars) {
  while (pos < text.size() && chars.find(text[pos]) != std::string_view::npos) ++pos;
  return pos;
}

std::optional<std::size_t> rule_marker(std::string_view text, std::span<const std::string> labels) {
  std::optional<std::size_t> hit;
  std::size_t hit_pos = 0;
  // `scope` ends at a closing marker for bold spans, so "__B__" still has a
  // boundary after B.
  auto consider = [&](std::string_view scope, std::size_t pos) {
    if (auto idx = label_at(scope, pos, labels); idx && (!hit || pos >= hit_pos)) {
      hit = idx;
      hit_pos = pos;
    }
  };

  for (std::string_view marker : {std::string_view("**"), std::string_view("__")}) {
    std::size_t pos = 0;
    while ((pos = text.find(marker, pos)) != std::string_view::npos) {
      const auto close = text.find(marker, pos + 2);
      if (close == std::string_view::npos) break;
      const auto span = text.substr(0, close);
      const auto start = skip(span, pos + 2, " \t*_([\"'");
      if (start < close) consider(span, start);
      pos = close + 2;
    }
  }

  for (std::string_view phrase : {std::string_view("answer is"), std::string_view("answer:")}) {
    for (std::size_t pos = 0; pos + phrase.size() <= text.size(); ++pos) {
      if (!iequal_at(text, pos, phrase)) continue;
      const auto start = skip(text, pos + phrase.size(), " \t*_([\"':");
      if (start < text.size()) consider(text, start);
    }
  }
  return hit;
}

std::string normalize_tail(std::string_view s) {
  const auto b = s.find_first_not_of(" \t*_");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t*_.");
  if (e == std::string_view::npos || e < b) return {};
  std::string out(s.substr(b, e - b + 1));
  std::transform(out.begin(), out.end(), out.begin(), fold);
  return out;
}

std::optional<std::size_t> rule_choice_line(std::string_view text, std::span<const Choice> choices,
                                            std::span<const std::string> labels) {
  std::optional<std::size_t> hit;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(pos, end - pos);
    pos = end + 1;

    const auto start = skip(line, 0, " \t*_>-#");
    if (auto idx = label_at(line, start, labels)) {
      const auto after = start + labels[*idx].size();
      if (after < line.size() && (line[after] == '.' || line[after] == ':')) {
        const auto rest = normalize_tail(line.substr(after + 1));
        const auto choice_text = normalize_tail(choices[*idx].text);
        if (!rest.empty() && !choice_text.empty() && (rest.starts_with(choice_text) || choice_text.starts_with(rest)))
          hit = idx;
      }
    }
    if (end == text.size()) break;
  }
  return hit;
}

std::optional<std::size_t> rule_standalone(std::string_view text, std::span<const std::string> labels) {
  std::set<std::size_t> found;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& l = labels[i];
    if (l.empty()) continue;
    for (auto pos = text.find(l); pos != std::string_view::npos; pos = text.find(l, pos + 1)) {
      if (boundary_before(text, pos, l) && boundary_after(text, pos + l.size(), l)) {
        found.insert(i);
        break;
      }
    }
  }
  if (found.size() == 1) return *found.begin();
  return std::nullopt;
}

std::optional<std::size_t> rule_choice_text(std::string_view text, std::span<const Choice> choices) {
  std::optional<std::size_t> hit;
  int matched = 0;
  for (std::size_t i = 0; i < choices.size(); ++i) {
    const std::string_view needle = choices[i].text;
    if (needle.empty()) continue;
    for (std::size_t pos = 0; pos + needle.size() <= text.size(); ++pos) {
      if (iequal_at(text, pos, needle) && boundary_before(text, pos, needle) &&
          boundary_after(text, pos + needle.size(), needle)) {
        hit = i;
        ++matched;
        break;
      }
    }
  }
  if (matched == 1) return hit;
  return std::nullopt;
}

}  // namespace

Extraction extract_choice_detailed(std::string_view response, std::span<const Choice> choices) {
  std::vector<std::string> labels;
  labels.reserve(choices.size());
  for (const auto& c : choices) labels.push_back(c.label);

  auto found = [&](std::size_t idx, ExtractionRule rule) { return Extraction{labels[idx], rule}; };
  if (auto idx = rule_marker(response, labels)) return found(*idx, ExtractionRule::Marker);
  if (auto idx = rule_choice_line(response, choices, labels)) return found(*idx, ExtractionRule::ChoiceLine);
  if (auto idx = rule_standalone(response, labels)) return found(*idx, ExtractionRule::Standalone);
  if (auto idx = rule_choice_text(response, choices)) return found(*idx, ExtractionRule::ChoiceText);
  return {};
}

ParsedLabel extract_choice(std::string_view response, std::span<const Choice> choices) {
  return extract_choice_detailed(response, choices).label;
}

ParsedLabel extract_choice(std::string_view response, std::span<const std::string> labels) {
  if (auto idx = rule_marker(response, labels)) return labels[*idx];
  if (auto idx = rule_standalone(response, labels)) return labels[*idx];
  return std::nullopt;
}

bool grade(const ParsedLabel& parsed, std::string_view answer_key) {
  return parsed.has_value() && *parsed == answer_key;
}

std::string_view to_string(TransitionType t) {
  switch (t) {
    case TransitionType::Type1: return "Type1";
    case TransitionType::Type2: return "Type2";
    case TransitionType::Type3: return "Type3";
    case TransitionType::Type4: return "Type4";
    case TransitionType::Undetermined: return "Undetermined";
  }
  return "Undetermined";
}

TransitionType transition_from_string(std::string_view s) {
  if (s == "Type1") return TransitionType::Type1;
  if (s == "Type2") return TransitionType::Type2;
  if (s == "Type3") return TransitionType::Type3;
  if (s == "Type4") return TransitionType::Type4;
  if (s == "Undetermined") return TransitionType::Undetermined;
  throw DataError("unknown transition type \"" + std::string(s) + "\"");
}

TransitionType classify_transition(const ParsedLabel& ir, const ParsedLabel& rr, std::string_view answer_key) {
  if (!ir || !rr) return TransitionType::Undetermined;
  const bool before = grade(ir, answer_key);
  const bool after = grade(rr, answer_key);
  if (before && after) return TransitionType::Type1;
  if (!before && after) return TransitionType::Type2;
  if (before && !after) return TransitionType::Type3;
  return TransitionType::Type4;
}

std::size_t TransitionCounts::total() const {
  std::size_t n = 0;
  for (auto c : by_type) n += c;
  return n;
}

}  // namespace scl
