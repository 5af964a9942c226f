// SPDX-License-Identifier: Apache-2.0
//
// JSON field access shared by the file formats. Private to scl_core.

#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <string_view>

#include "scl/corpus.hpp"
#include "scl/errors.hpp"

namespace scl::codec {

using nlohmann::json;

// Thrown by the field helpers; callers prefix it with a record/line number.
class FieldError : public DataError {
 public:
  FieldError(std::string field, const std::string& what) : DataError(what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

inline const json& require(const json& obj, std::string_view field) {
  if (!obj.is_object()) throw FieldError(std::string(field), "record is not an object");
  auto it = obj.find(field);
  if (it == obj.end()) throw FieldError(std::string(field), "missing field \"" + std::string(field) + "\"");
  return *it;
}

inline std::string require_string(const json& obj, std::string_view field) {
  const auto& v = require(obj, field);
  if (!v.is_string()) throw FieldError(std::string(field), "field \"" + std::string(field) + "\" must be a string");
  return v.get<std::string>();
}

inline json parse_line(std::string_view line, const std::string& where) {
  try {
    return json::parse(line);
  } catch (const json::parse_error& e) {
    throw DataError(where + ": malformed JSON: " + e.what());
  }
}

json image_to_json(const ImageRef& image);
ImageRef image_from_json(const json& j);
json choices_to_json(const std::vector<Choice>& choices);
std::vector<Choice> choices_from_json(const json& j);
json sample_to_json(const MCQSample& s);
MCQSample sample_from_json(const json& j);

}  // namespace scl::codec
