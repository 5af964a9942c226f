// SPDX-License-Identifier: Apache-2.0

#include "scl/http_backend.hpp"

#include <httplib.h>

#include <algorithm>
#include <cstdlib>
#include <thread>

#include "codec.hpp"
#include "scl/io.hpp"

namespace scl {

using codec::json;

std::string base64_encode(std::string_view bytes) {
  static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const auto n = (std::uint32_t(std::uint8_t(bytes[i])) << 16) | (std::uint32_t(std::uint8_t(bytes[i + 1])) << 8) |
                   std::uint32_t(std::uint8_t(bytes[i + 2]));
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += kAlphabet[(n >> 6) & 63];
    out += kAlphabet[n & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest > 0) {
    std::uint32_t n = std::uint32_t(std::uint8_t(bytes[i])) << 16;
    if (rest == 2) n |= std::uint32_t(std::uint8_t(bytes[i + 1])) << 8;
    out += kAlphabet[(n >> 18) & 63];
    out += kAlphabet[(n >> 12) & 63];
    out += rest == 2 ? kAlphabet[(n >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

namespace {

std::string mime_from_extension(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".gif") return "image/gif";
  if (ext == ".webp") return "image/webp";
  if (ext == ".bmp") return "image/bmp";
  return "image/png";
}

// Magic-number sniffing on the base64 text itself.
std::string mime_from_base64(std::string_view b64) {
  if (b64.starts_with("/9j/")) return "image/jpeg";
  if (b64.starts_with("R0lGOD")) return "image/gif";
  if (b64.starts_with("UklGR")) return "image/webp";
  return "image/png";
}

json content_of(const ChatTurn& turn) {
  const bool text_only = std::all_of(turn.parts.begin(), turn.parts.end(),
                                     [](const ContentPart& p) { return std::holds_alternative<TextPart>(p); });
  if (text_only) return turn.text();
  json parts = json::array();
  for (const auto& part : turn.parts) {
    if (const auto* t = std::get_if<TextPart>(&part)) {
      parts.push_back(json{{"type", "text"}, {"text", t->text}});
    } else {
      const auto& img = std::get<ImagePart>(part).image;
      parts.push_back(json{{"type", "image_url"}, {"image_url", json{{"url", image_wire_url(img)}}}});
    }
  }
  return parts;
}

}  // namespace

std::string image_wire_url(const ImageRef& image) {
  switch (image.kind) {
    case ImageKind::Url:
      return image.value;
    case ImageKind::Base64:
      if (image.value.starts_with("data:")) return image.value;
      return "data:" + mime_from_base64(image.value) + ";base64," + image.value;
    case ImageKind::Path: {
      const std::filesystem::path p(image.value);
      return "data:" + mime_from_extension(p) + ";base64," + base64_encode(read_file(p));
    }
  }
  return image.value;
}

std::string build_chat_request(const Conversation& conversation, const GenerationSettings& settings) {
  json messages = json::array();
  for (const auto& turn : conversation.turns)
    messages.push_back(json{{"role", std::string(to_string(turn.role))}, {"content", content_of(turn)}});
  json body{{"model", settings.model_id},
            {"messages", std::move(messages)},
            {"temperature", settings.temperature},
            {"max_tokens", settings.max_tokens}};
  return body.dump();
}

std::string extract_completion_text(const std::string& response_body) {
  json j;
  try {
    j = json::parse(response_body);
  } catch (const json::parse_error& e) {
    throw BackendError(std::string("malformed completion response: ") + e.what());
  }
  const json* content = nullptr;
  if (j.is_object() && j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
    const auto& choice = j["choices"][0];
    if (choice.is_object() && choice.contains("message") && choice["message"].is_object() &&
        choice["message"].contains("content"))
      content = &choice["message"]["content"];
  }
  if (content == nullptr) throw BackendError("completion response has no choices[0].message.content");
  std::string text;
  if (content->is_string()) {
    text = content->get<std::string>();
  } else if (content->is_array()) {
    for (const auto& part : *content)
      if (part.is_object() && part.value("type", "") == "text") text += part.value("text", "");
  }
  if (text.empty()) throw BackendError("empty completion");
  return text;
}

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
  if (config_.parallelism < 1) throw UsageError("http backend parallelism must be positive");
  if (config_.max_retries < 0) throw UsageError("http backend max_retries must be non-negative");
  auto url = config_.base_url;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw UsageError("base_url needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? std::string() : url.substr(path_start);
  while (!path_.empty() && path_.back() == '/') path_.pop_back();
  path_ += "/chat/completions";
}

std::string HttpBackend::post_once(const std::string& body, int& status, bool& transient) const {
  httplib::Client client(scheme_host_port_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key != nullptr && *key != '\0')
    headers.emplace("Authorization", std::string("Bearer ") + key);

  auto res = client.Post(path_, headers, body, "application/json");
  if (!res) {
    status = 0;
    transient = true;
    return "transport failure: " + httplib::to_string(res.error());
  }
  status = res->status;
  transient = status == 429 || status >= 500;
  return res->body;
}

std::string HttpBackend::complete(const Conversation& conversation, const GenerationSettings& settings) {
  validate_conversation(conversation);
  const auto body = build_chat_request(conversation, settings);

  {
    std::unique_lock lock(slots_mu_);
    slots_cv_.wait(lock, [&] { return in_flight_ < config_.parallelism; });
    ++in_flight_;
  }
  struct SlotRelease {
    HttpBackend* self;
    ~SlotRelease() {
      {
        std::lock_guard lock(self->slots_mu_);
        --self->in_flight_;
      }
      self->slots_cv_.notify_one();
    }
  } release{this};

  const int max_attempts = 1 + config_.max_retries;
  int status = 0;
  std::string detail;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    bool transient = false;
    detail = post_once(body, status, transient);
    if (status >= 200 && status < 300) return extract_completion_text(detail);
    if (!transient)
      throw BackendError("backend returned status " + std::to_string(status) + ": " + detail.substr(0, 200), attempt,
                         status);
    if (attempt < max_attempts) std::this_thread::sleep_for(config_.backoff * (1LL << (attempt - 1)));
  }
  const std::string last = status == 0 ? detail : "status " + std::to_string(status);
  throw BackendError("backend request failed after " + std::to_string(max_attempts) + " attempts (" + last + ")",
                     max_attempts, status);
}

}  // namespace scl
