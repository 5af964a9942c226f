// SPDX-License-Identifier: Apache-2.0
//
// Chat-style model access. Backends implement ModelBackend::complete; the
// self-correction engine never knows which one it is talking to.

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "scl/corpus.hpp"

namespace scl {

enum class Role { System, User, Assistant };
std::string_view to_string(Role role);

struct TextPart {
  std::string text;
  bool operator==(const TextPart&) const = default;
};

struct ImagePart {
  ImageRef image;
  bool operator==(const ImagePart&) const = default;
};

using ContentPart = std::variant<TextPart, ImagePart>;

struct ChatTurn {
  Role role = Role::User;
  std::vector<ContentPart> parts;

  static ChatTurn user_text(std::string text);
  static ChatTurn assistant(std::string text);
  // Concatenation of all text parts, separated by '\n'.
  std::string text() const;

  bool operator==(const ChatTurn&) const = default;
};

struct Conversation {
  std::vector<ChatTurn> turns;
  // Routing metadata; never sent over the wire. The scripted backend keys its
  // fixture on (sample_id, turn_index).
  std::string sample_id;
  int turn_index = 0;

  bool operator==(const Conversation&) const = default;
};

// Throws UsageError naming the first broken rule: roles alternate user /
// assistant after an optional leading system turn, assistant turns are
// text-only, at most one image part, and the last turn is a user turn.
void validate_conversation(const Conversation& conversation);

struct GenerationSettings {
  double temperature = 0.0;
  int max_tokens = 512;
  std::string model_id;
};

class ModelBackend {
 public:
  virtual ~ModelBackend() = default;
  // Returns the assistant text for the next turn. Implementations must be
  // safe to call concurrently on distinct conversations.
  virtual std::string complete(const Conversation& conversation, const GenerationSettings& settings) = 0;
  virtual std::string name() const = 0;
};

// (sample_id, turn) -> text.
using FixtureKey = std::pair<std::string, int>;
using ScriptedFixture = std::map<FixtureKey, std::string, std::less<>>;

// Newline-delimited {sample_id, turn, text} records.
ScriptedFixture load_fixture(const std::filesystem::path& path);
ScriptedFixture parse_fixture(std::string_view text);
std::string serialize_fixture(const ScriptedFixture& fixture);

// Returns the fixture text for (conversation.sample_id,
// conversation.turn_index) verbatim. Missing keys raise BackendError naming
// the key.
std::string scripted_complete(const ScriptedFixture& fixture, const Conversation& conversation);

class ScriptedBackend final : public ModelBackend {
 public:
  explicit ScriptedBackend(ScriptedFixture fixture) : fixture_(std::move(fixture)) {}

  std::string complete(const Conversation& conversation, const GenerationSettings& settings) override;
  std::string name() const override { return "scripted"; }

 private:
  const ScriptedFixture fixture_;
};

}  // namespace scl
