// SPDX-License-Identifier: Apache-2.0
//
// Trace files: line 1 is a header with the settings used, every further line
// one SelfCorrectionRecord. Unparseable labels serialize as null.

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "scl/selfcorrect.hpp"

namespace scl {

struct TraceHeader {
  std::string backend;
  GenerationSettings settings;
  CorrectionPromptId prompt_id = CorrectionPromptId::VP1;
  int k_turns = kDefaultTurns;
  std::string rules_version{kExtractionRulesVersion};

  bool operator==(const TraceHeader& o) const {
    return backend == o.backend && settings.model_id == o.settings.model_id &&
           settings.temperature == o.settings.temperature && settings.max_tokens == o.settings.max_tokens &&
           prompt_id == o.prompt_id && k_turns == o.k_turns && rules_version == o.rules_version;
  }
};

struct Trace {
  TraceHeader header;
  std::vector<SelfCorrectionRecord> records;
};

std::string serialize_trace(const Trace& trace);
// Errors name the 1-based line. Records are checked for equal-length lists
// of at least two entries and for correctness/transition consistency with the
// stored labels.
Trace parse_trace(std::string_view text);

void write_trace(const Trace& trace, const std::filesystem::path& path);
Trace read_trace(const std::filesystem::path& path);

}  // namespace scl
