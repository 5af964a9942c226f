// SPDX-License-Identifier: Apache-2.0

#include "scl/corpus.hpp"

#include <algorithm>
#include <set>

#include "codec.hpp"
#include "scl/io.hpp"
#include "scl/rng.hpp"

namespace scl {

std::string_view to_string(ImageKind kind) {
  switch (kind) {
    case ImageKind::Path: return "path";
    case ImageKind::Url: return "url";
    case ImageKind::Base64: return "base64";
  }
  return "path";
}

ImageKind image_kind_from_string(std::string_view s) {
  if (s == "path") return ImageKind::Path;
  if (s == "url") return ImageKind::Url;
  if (s == "base64") return ImageKind::Base64;
  throw DataError("unknown image kind \"" + std::string(s) + "\"");
}

std::vector<std::string> MCQSample::labels() const {
  std::vector<std::string> out;
  out.reserve(choices.size());
  for (const auto& c : choices) out.push_back(c.label);
  return out;
}

const Choice* MCQSample::find_choice(std::string_view label) const {
  for (const auto& c : choices)
    if (c.label == label) return &c;
  return nullptr;
}

std::vector<std::string> sample_violations(const MCQSample& sample) {
  std::vector<std::string> v;
  if (sample.id.empty()) v.emplace_back("empty id");
  if (sample.choices.size() < 2) v.emplace_back("fewer than 2 choices");
  std::set<std::string, std::less<>> seen;
  for (std::size_t i = 0; i < sample.choices.size(); ++i) {
    const auto& label = sample.choices[i].label;
    if (label.empty()) {
      v.push_back("empty label at choice " + std::to_string(i + 1));
      continue;
    }
    if (!seen.insert(label).second) v.push_back("duplicate label '" + label + "'");
  }
  if (!seen.contains(sample.answer_key)) v.emplace_back("answer_key not among labels");
  return v;
}

const MCQSample& validate_sample(const MCQSample& sample) {
  auto v = sample_violations(sample);
  if (!v.empty()) throw ValidationError(std::move(v));
  return sample;
}

namespace codec {

json image_to_json(const ImageRef& image) {
  return json{{"kind", std::string(to_string(image.kind))}, {"value", image.value}};
}

ImageRef image_from_json(const json& j) {
  try {
    return ImageRef{image_kind_from_string(require_string(j, "kind")), require_string(j, "value")};
  } catch (const DataError& e) {
    throw FieldError("image", std::string("field \"image\": ") + e.what());
  }
}

json choices_to_json(const std::vector<Choice>& choices) {
  json arr = json::array();
  for (const auto& c : choices) arr.push_back(json{{"label", c.label}, {"text", c.text}});
  return arr;
}

std::vector<Choice> choices_from_json(const json& j) {
  if (!j.is_array()) throw FieldError("choices", "field \"choices\" must be an array");
  std::vector<Choice> out;
  for (const auto& c : j) {
    try {
      out.push_back(Choice{require_string(c, "label"), require_string(c, "text")});
    } catch (const DataError& e) {
      throw FieldError("choices", std::string("field \"choices\": ") + e.what());
    }
  }
  return out;
}

json sample_to_json(const MCQSample& s) {
  return json{{"id", s.id},
              {"source", s.source},
              {"question", s.question},
              {"image", image_to_json(s.image)},
              {"choices", choices_to_json(s.choices)},
              {"answer_key", s.answer_key}};
}

MCQSample sample_from_json(const json& j) {
  MCQSample s;
  s.id = require_string(j, "id");
  s.source = require_string(j, "source");
  s.question = require_string(j, "question");
  s.image = image_from_json(require(j, "image"));
  s.choices = choices_from_json(require(j, "choices"));
  s.answer_key = require_string(j, "answer_key");
  return s;
}

}  // namespace codec

std::vector<MCQSample> parse_corpus(std::string_view text) {
  std::vector<MCQSample> out;
  std::set<std::string, std::less<>> ids;
  std::size_t record = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (is_blank(line)) {
      if (end == text.size()) break;
      continue;
    }
    ++record;
    const std::string where = "record " + std::to_string(record);
    auto j = codec::parse_line(line, where);
    MCQSample s;
    try {
      s = codec::sample_from_json(j);
    } catch (const codec::FieldError& e) {
      throw DataError(where + ": " + e.what());
    }
    auto v = sample_violations(s);
    if (!v.empty()) {
      for (auto& msg : v) msg = where + " (id \"" + s.id + "\"): " + msg;
      throw ValidationError(std::move(v));
    }
    if (!ids.insert(s.id).second) throw DataError(where + ": duplicate id \"" + s.id + "\"");
    out.push_back(std::move(s));
    if (end == text.size()) break;
  }
  return out;
}

std::vector<MCQSample> load_corpus(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw DataError("corpus file not found: " + path.string());
  try {
    return parse_corpus(read_file(path));
  } catch (const ValidationError&) {
    throw;
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string serialize_corpus(const std::vector<MCQSample>& samples) {
  std::string out;
  for (const auto& s : samples) {
    out += codec::sample_to_json(s).dump();
    out += '\n';
  }
  return out;
}

namespace {
void sort_by_id(std::vector<MCQSample>& v) {
  std::sort(v.begin(), v.end(), [](const MCQSample& a, const MCQSample& b) { return a.id < b.id; });
}
}  // namespace

CorpusSplit split_eval_build(const std::vector<MCQSample>& corpus, std::size_t eval_count,
                             std::uint64_t seed) {
  CorpusSplit split;
  split.seed = seed;
  split.eval_count = eval_count;
  const auto order = shuffled_indices(corpus.size(), seed);
  const std::size_t take = std::min(eval_count, corpus.size());
  split.eval_set.reserve(take);
  split.build_set.reserve(corpus.size() - take);
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < take ? split.eval_set : split.build_set).push_back(corpus[order[i]]);
  }
  sort_by_id(split.eval_set);
  sort_by_id(split.build_set);
  return split;
}

CorpusIndex index_by_id(const std::vector<MCQSample>& samples) {
  CorpusIndex index;
  for (const auto& s : samples) {
    if (!index.emplace(s.id, s).second) throw DataError("duplicate id \"" + s.id + "\" across corpora");
  }
  return index;
}

}  // namespace scl
