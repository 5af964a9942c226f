// SPDX-License-Identifier: Apache-2.0
//
// Chat-completions-compatible HTTP backend.
//
//   POST {base_url}/chat/completions
//   {"model": ..., "messages": [{"role": ..., "content": ...}], "temperature": ..., "max_tokens": ...}
//
// Text-only turns send `content` as a string; a turn carrying the image sends
// an array of {"type": "image_url", "image_url": {"url": ...}} and
// {"type": "text", "text": ...} parts. Path and base64 images travel as data
// URLs, URL images as-is. The reply's choices[0].message.content is the
// assistant text.

#pragma once

#include <chrono>
#include <condition_variable>
#include <mutex>
#include <string>

#include "scl/gateway.hpp"

namespace scl {

struct HttpBackendConfig {
  // e.g. "http://localhost:8000/v1"; "/chat/completions" is appended.
  std::string base_url;
  // Environment variable holding the bearer token. Unset or empty variable
  // means no Authorization header.
  std::string api_key_env = "SCL_API_KEY";
  std::chrono::milliseconds timeout{std::chrono::seconds(120)};
  // Retries after the first attempt for transport failures, 429 and 5xx.
  int max_retries = 3;
  std::chrono::milliseconds backoff{500};
  // Upper bound on concurrent in-flight requests.
  int parallelism = 4;
};

std::string build_chat_request(const Conversation& conversation, const GenerationSettings& settings);
// Throws BackendError on a body without choices[0].message.content or with an
// empty completion.
std::string extract_completion_text(const std::string& response_body);
// Data URL (or plain URL) used for an image on the wire.
std::string image_wire_url(const ImageRef& image);

std::string base64_encode(std::string_view bytes);

class HttpBackend final : public ModelBackend {
 public:
  explicit HttpBackend(HttpBackendConfig config);

  std::string complete(const Conversation& conversation, const GenerationSettings& settings) override;
  std::string name() const override { return "http"; }

 private:
  std::string post_once(const std::string& body, int& status, bool& transient) const;

  HttpBackendConfig config_;
  std::string scheme_host_port_;
  std::string path_;

  std::mutex slots_mu_;
  std::condition_variable slots_cv_;
  int in_flight_ = 0;
};

}  // namespace scl
