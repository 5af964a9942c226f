// SPDX-License-Identifier: Apache-2.0

#include "scl/prefset.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "codec.hpp"
#include "scl/io.hpp"
#include "scl/rng.hpp"

namespace scl {

using codec::json;

namespace {
constexpr std::string_view kSetFormat = "scl-selfcorset/1";

PreferredOrigin origin_from_string(std::string_view s) {
  if (s == "IR") return PreferredOrigin::IR;
  if (s == "RR") return PreferredOrigin::RR;
  throw DataError("preferred_origin must be IR or RR");
}

void sort_pairs(std::vector<PreferencePair>& pairs) {
  std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.sample_id < b.sample_id; });
}
}  // namespace

std::string_view to_string(PreferredOrigin o) { return o == PreferredOrigin::IR ? "IR" : "RR"; }

std::vector<std::string> pair_violations(const PreferencePair& pair) {
  std::vector<std::string> v;
  if (pair.transition != TransitionType::Type2 && pair.transition != TransitionType::Type3) {
    v.emplace_back("transition not in {Type2, Type3}");
  } else {
    const auto expected = pair.transition == TransitionType::Type2 ? PreferredOrigin::RR : PreferredOrigin::IR;
    if (pair.preferred_origin != expected)
      v.push_back(std::string(to_string(pair.transition)) + " pair must have preferred_origin " +
                  std::string(to_string(expected)));
  }
  MCQSample as_sample{pair.sample_id, pair.source, pair.question, pair.image, pair.choices, pair.answer_key};
  auto sample_v = sample_violations(as_sample);
  v.insert(v.end(), sample_v.begin(), sample_v.end());
  if (sample_v.empty()) {
    if (!grade(extract_choice(pair.preferred, pair.choices), pair.answer_key))
      v.emplace_back("preferred response does not grade correct");
    if (grade(extract_choice(pair.disfavored, pair.choices), pair.answer_key))
      v.emplace_back("disfavored response grades correct");
  }
  return v;
}

SelfCorSet build_preference_pairs(const std::vector<SelfCorrectionRecord>& records, const CorpusIndex& samples,
                                  const std::string& model_id, std::uint64_t seed) {
  SelfCorSet set;
  set.meta.model_id = model_id;
  set.meta.seed = seed;
  if (!records.empty()) set.meta.prompt_id = records.front().prompt_id;

  std::set<std::string, std::less<>> seen;
  for (const auto& r : records) {
    auto it = samples.find(r.sample_id);
    if (it == samples.end()) throw DataError("record sample_id \"" + r.sample_id + "\" not found in corpus");
    if (!seen.insert(r.sample_id).second) throw DataError("duplicate record for sample_id \"" + r.sample_id + "\"");
    if (r.responses.size() < 2) throw DataError("record \"" + r.sample_id + "\" has fewer than two responses");
    ++set.meta.counts[r.transition];
    if (r.transition != TransitionType::Type2 && r.transition != TransitionType::Type3) continue;

    const auto& s = it->second;
    const bool type2 = r.transition == TransitionType::Type2;
    PreferencePair p;
    p.sample_id = s.id;
    p.source = s.source;
    p.question = s.question;
    p.image = s.image;
    p.choices = s.choices;
    p.answer_key = s.answer_key;
    p.preferred = type2 ? r.responses[1] : r.responses[0];
    p.disfavored = type2 ? r.responses[0] : r.responses[1];
    p.transition = r.transition;
    p.preferred_origin = type2 ? PreferredOrigin::RR : PreferredOrigin::IR;
    p.prompt_id = r.prompt_id;
    p.model_id = model_id;
    if (auto v = pair_violations(p); !v.empty()) {
      for (auto& msg : v) msg = "sample \"" + s.id + "\": " + msg;
      throw ValidationError(std::move(v));
    }
    set.pairs.push_back(std::move(p));
  }
  sort_pairs(set.pairs);
  return set;
}

std::string serialize_selfcorset(const SelfCorSet& set) {
  json counts = json::object();
  for (auto t : kAllTransitions) counts[std::string(to_string(t))] = set.meta.counts[t];
  json meta{{"format", std::string(kSetFormat)},
            {"model_id", set.meta.model_id},
            {"prompt_id", std::string(to_string(set.meta.prompt_id))},
            {"rules_version", set.meta.rules_version},
            {"seed", set.meta.seed},
            {"counts", std::move(counts)},
            {"pairs", set.pairs.size()}};
  std::string out = meta.dump();
  out += '\n';
  for (const auto& p : set.pairs) {
    json line{{"sample_id", p.sample_id},
              {"source", p.source},
              {"question", p.question},
              {"image", codec::image_to_json(p.image)},
              {"choices", codec::choices_to_json(p.choices)},
              {"answer_key", p.answer_key},
              {"preferred", p.preferred},
              {"disfavored", p.disfavored},
              {"transition", std::string(to_string(p.transition))},
              {"preferred_origin", std::string(to_string(p.preferred_origin))},
              {"prompt_id", std::string(to_string(p.prompt_id))},
              {"model_id", p.model_id}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

SelfCorSet parse_selfcorset(std::string_view text) {
  SelfCorSet set;
  bool have_meta = false;
  std::size_t declared = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (is_blank(line)) continue;
    const std::string where = "line " + std::to_string(line_no);
    auto j = codec::parse_line(line, where);
    try {
      if (!have_meta) {
        if (j.value("format", "") != kSetFormat)
          throw DataError("missing metadata header (format " + std::string(kSetFormat) + ")");
        auto& m = set.meta;
        m.model_id = codec::require_string(j, "model_id");
        m.prompt_id = prompt_id_from_string(codec::require_string(j, "prompt_id"));
        m.rules_version = codec::require_string(j, "rules_version");
        m.seed = codec::require(j, "seed").get<std::uint64_t>();
        const auto& counts = codec::require(j, "counts");
        for (auto t : kAllTransitions) m.counts[t] = codec::require(counts, to_string(t)).get<std::size_t>();
        declared = codec::require(j, "pairs").get<std::size_t>();
        have_meta = true;
        continue;
      }
      PreferencePair p;
      p.sample_id = codec::require_string(j, "sample_id");
      p.source = codec::require_string(j, "source");
      p.question = codec::require_string(j, "question");
      p.image = codec::image_from_json(codec::require(j, "image"));
      p.choices = codec::choices_from_json(codec::require(j, "choices"));
      p.answer_key = codec::require_string(j, "answer_key");
      p.preferred = codec::require_string(j, "preferred");
      p.disfavored = codec::require_string(j, "disfavored");
      p.transition = transition_from_string(codec::require_string(j, "transition"));
      p.preferred_origin = origin_from_string(codec::require_string(j, "preferred_origin"));
      p.prompt_id = prompt_id_from_string(codec::require_string(j, "prompt_id"));
      p.model_id = codec::require_string(j, "model_id");
      if (auto v = pair_violations(p); !v.empty()) throw ValidationError(std::move(v));
      if (!set.pairs.empty() && !(set.pairs.back().sample_id < p.sample_id))
        throw DataError("pairs must be sorted by unique sample_id (\"" + p.sample_id + "\")");
      set.pairs.push_back(std::move(p));
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    } catch (const json::exception& e) {
      throw DataError(where + ": " + e.what());
    }
  }
  if (!have_meta) throw DataError("selfcorset is empty (no metadata header)");
  if (declared != set.pairs.size())
    throw DataError("header declares " + std::to_string(declared) + " pairs, file holds " +
                    std::to_string(set.pairs.size()));
  return set;
}

void write_selfcorset(const SelfCorSet& set, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_selfcorset(set));
}

SelfCorSet read_selfcorset(const std::filesystem::path& path) {
  try {
    return parse_selfcorset(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::size_t subset_size(std::size_t n, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw UsageError("subset proportion must lie in [0, 1]");
  const auto k = static_cast<std::size_t>(std::floor(p * static_cast<double>(n) + 1e-9));
  return std::min(k, n);
}

SelfCorSet subset(const SelfCorSet& set, double p, std::uint64_t seed) {
  const auto k = subset_size(set.pairs.size(), p);
  const auto order = shuffled_indices(set.pairs.size(), seed);
  SelfCorSet out;
  out.meta = set.meta;
  out.pairs.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.pairs.push_back(set.pairs[order[i]]);
  sort_pairs(out.pairs);
  return out;
}

}  // namespace scl
