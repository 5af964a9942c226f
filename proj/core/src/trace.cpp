// SPDX-License-Identifier: Apache-2.0

#include "scl/trace.hpp"

#include "codec.hpp"
#include "scl/io.hpp"

namespace scl {

using codec::json;

namespace {

constexpr std::string_view kTraceFormat = "scl-trace/1";

json record_to_json(const SelfCorrectionRecord& r) {
  json labels = json::array();
  for (const auto& l : r.parsed_labels) labels.push_back(l ? json(*l) : json(nullptr));
  json correct = json::array();
  for (bool c : r.correctness) correct.push_back(c);
  return json{{"sample_id", r.sample_id},
              {"answer_key", r.answer_key},
              {"prompt_id", std::string(to_string(r.prompt_id))},
              {"responses", r.responses},
              {"parsed_labels", std::move(labels)},
              {"correctness", std::move(correct)},
              {"transition", std::string(to_string(r.transition))}};
}

SelfCorrectionRecord record_from_json(const json& j) {
  SelfCorrectionRecord r;
  r.sample_id = codec::require_string(j, "sample_id");
  r.answer_key = codec::require_string(j, "answer_key");
  r.prompt_id = prompt_id_from_string(codec::require_string(j, "prompt_id"));
  const auto& responses = codec::require(j, "responses");
  const auto& labels = codec::require(j, "parsed_labels");
  const auto& correct = codec::require(j, "correctness");
  if (!responses.is_array() || !labels.is_array() || !correct.is_array())
    throw DataError("responses, parsed_labels and correctness must be arrays");
  for (const auto& x : responses) {
    if (!x.is_string()) throw DataError("responses must hold strings");
    r.responses.push_back(x.get<std::string>());
  }
  for (const auto& x : labels) {
    if (x.is_null())
      r.parsed_labels.emplace_back(std::nullopt);
    else if (x.is_string())
      r.parsed_labels.emplace_back(x.get<std::string>());
    else
      throw DataError("parsed_labels must hold strings or null");
  }
  for (const auto& x : correct) {
    if (!x.is_boolean()) throw DataError("correctness must hold booleans");
    r.correctness.push_back(x.get<bool>());
  }
  r.transition = transition_from_string(codec::require_string(j, "transition"));

  const auto n = r.responses.size();
  if (n < 2 || r.parsed_labels.size() != n || r.correctness.size() != n)
    throw DataError("responses, parsed_labels and correctness need equal length >= 2");
  for (std::size_t i = 0; i < n; ++i)
    if (r.correctness[i] != grade(r.parsed_labels[i], r.answer_key))
      throw DataError("correctness[" + std::to_string(i) + "] disagrees with parsed label");
  if (r.transition != classify_transition(r.parsed_labels[0], r.parsed_labels[1], r.answer_key))
    throw DataError("transition disagrees with parsed labels");
  return r;
}

}  // namespace

std::string serialize_trace(const Trace& trace) {
  const auto& h = trace.header;
  json header{{"format", std::string(kTraceFormat)},
              {"backend", h.backend},
              {"model_id", h.settings.model_id},
              {"temperature", h.settings.temperature},
              {"max_tokens", h.settings.max_tokens},
              {"prompt_id", std::string(to_string(h.prompt_id))},
              {"k_turns", h.k_turns},
              {"rules_version", h.rules_version},
              {"records", trace.records.size()}};
  std::string out = header.dump();
  out += '\n';
  for (const auto& r : trace.records) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

Trace parse_trace(std::string_view text) {
  Trace trace;
  bool have_header = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (is_blank(line)) continue;
    const std::string where = "trace line " + std::to_string(line_no);
    auto j = codec::parse_line(line, where);
    try {
      if (!have_header) {
        if (j.value("format", "") != kTraceFormat) throw DataError("missing trace header (format " +
                                                                   std::string(kTraceFormat) + ")");
        auto& h = trace.header;
        h.backend = codec::require_string(j, "backend");
        h.settings.model_id = codec::require_string(j, "model_id");
        h.settings.temperature = codec::require(j, "temperature").get<double>();
        h.settings.max_tokens = codec::require(j, "max_tokens").get<int>();
        h.prompt_id = prompt_id_from_string(codec::require_string(j, "prompt_id"));
        h.k_turns = codec::require(j, "k_turns").get<int>();
        h.rules_version = codec::require_string(j, "rules_version");
        have_header = true;
      } else {
        trace.records.push_back(record_from_json(j));
      }
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    } catch (const json::exception& e) {
      throw DataError(where + ": " + e.what());
    }
  }
  if (!have_header) throw DataError("trace is empty (no header line)");
  return trace;
}

void write_trace(const Trace& trace, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_trace(trace));
}

Trace read_trace(const std::filesystem::path& path) {
  try {
    return parse_trace(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace scl
