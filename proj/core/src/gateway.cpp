// SPDX-License-Identifier: Apache-2.0

#include "scl/gateway.hpp"

#include "codec.hpp"
#include "scl/io.hpp"

namespace scl {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "user";
}

ChatTurn ChatTurn::user_text(std::string text) {
  return ChatTurn{Role::User, {TextPart{std::move(text)}}};
}

ChatTurn ChatTurn::assistant(std::string text) {
  return ChatTurn{Role::Assistant, {TextPart{std::move(text)}}};
}

std::string ChatTurn::text() const {
  std::string out;
  bool first = true;
  for (const auto& part : parts) {
    if (const auto* t = std::get_if<TextPart>(&part)) {
      if (!first) out += '\n';
      out += t->text;
      first = false;
    }
  }
  return out;
}

void validate_conversation(const Conversation& conversation) {
  const auto& turns = conversation.turns;
  if (turns.empty()) throw UsageError("conversation is empty");
  std::size_t start = turns.front().role == Role::System ? 1 : 0;
  if (start == turns.size()) throw UsageError("conversation has no user turn");
  int images = 0;
  for (std::size_t i = 0; i < turns.size(); ++i) {
    const auto& t = turns[i];
    if (i >= start) {
      const Role expected = ((i - start) % 2 == 0) ? Role::User : Role::Assistant;
      if (t.role != expected)
        throw UsageError("turn " + std::to_string(i) + ": expected " + std::string(to_string(expected)) +
                         " turn, found " + std::string(to_string(t.role)));
    }
    for (const auto& part : t.parts) {
      if (std::holds_alternative<ImagePart>(part)) {
        if (t.role != Role::User) throw UsageError("turn " + std::to_string(i) + ": image part outside a user turn");
        ++images;
      }
    }
  }
  if (images > 1) throw UsageError("conversation carries more than one image part");
  if (turns.back().role != Role::User) throw UsageError("last turn must be a user turn");
}

ScriptedFixture parse_fixture(std::string_view text) {
  ScriptedFixture fixture;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (is_blank(line)) continue;
    const std::string where = "fixture line " + std::to_string(line_no);
    auto j = codec::parse_line(line, where);
    try {
      const auto& turn = codec::require(j, "turn");
      if (!turn.is_number_integer()) throw DataError("field \"turn\" must be an integer");
      FixtureKey key{codec::require_string(j, "sample_id"), turn.get<int>()};
      if (fixture.contains(key))
        throw DataError("duplicate key (\"" + key.first + "\", " + std::to_string(key.second) + ")");
      fixture.emplace(std::move(key), codec::require_string(j, "text"));
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
  }
  return fixture;
}

ScriptedFixture load_fixture(const std::filesystem::path& path) { return parse_fixture(read_file(path)); }

std::string serialize_fixture(const ScriptedFixture& fixture) {
  std::string out;
  for (const auto& [key, text] : fixture) {
    out += codec::json{{"sample_id", key.first}, {"turn", key.second}, {"text", text}}.dump();
    out += '\n';
  }
  return out;
}

std::string scripted_complete(const ScriptedFixture& fixture, const Conversation& conversation) {
  auto it = fixture.find(FixtureKey{conversation.sample_id, conversation.turn_index});
  if (it == fixture.end())
    throw BackendError("scripted fixture has no entry for key (\"" + conversation.sample_id + "\", " +
                       std::to_string(conversation.turn_index) + ")");
  return it->second;
}

std::string ScriptedBackend::complete(const Conversation& conversation, const GenerationSettings&) {
  validate_conversation(conversation);
  return scripted_complete(fixture_, conversation);
}

}  // namespace scl
