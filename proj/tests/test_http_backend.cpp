// SPDX-License-Identifier: Apache-2.0

#include <gmock/gmock.h>
#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <thread>

#include "scl/errors.hpp"
#include "scl/http_backend.hpp"
#include "support.hpp"

using namespace scl;
using json = nlohmann::json;
using ::testing::HasSubstr;

namespace {

// A local chat-completions endpoint whose behaviour each test scripts.
class FakeServer {
 public:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  explicit FakeServer(Handler handler) : handler_(std::move(handler)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      {
        std::lock_guard lock(mu_);
        bodies_.push_back(req.body);
        auth_.push_back(req.get_header_value("Authorization"));
      }
      ++hits_;
      handler_(req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }

  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
  int hits() const { return hits_; }
  std::vector<std::string> bodies() {
    std::lock_guard lock(mu_);
    return bodies_;
  }
  std::vector<std::string> auth() {
    std::lock_guard lock(mu_);
    return auth_;
  }

 private:
  Handler handler_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> hits_{0};
  std::mutex mu_;
  std::vector<std::string> bodies_;
  std::vector<std::string> auth_;
};

std::string completion(const std::string& text) {
  return json{{"choices", json::array({json{{"message", json{{"role", "assistant"}, {"content", text}}}}})}}.dump();
}

HttpBackendConfig fast_config(const std::string& base_url) {
  HttpBackendConfig c;
  c.base_url = base_url;
  c.api_key_env = "SCL_TEST_HTTP_KEY_UNSET";
  c.timeout = std::chrono::seconds(5);
  c.backoff = std::chrono::milliseconds(1);
  c.max_retries = 2;
  return c;
}

Conversation two_turns() {
  Conversation c;
  c.sample_id = "q1";
  c.turn_index = 1;
  c.turns = {ChatTurn{Role::User,
                      {ImagePart{ImageRef{ImageKind::Base64, "iVBORw0KGgo="}}, TextPart{"What is shown?\nA. cat"}}},
             ChatTurn::assistant("The answer is A."), ChatTurn::user_text("Review your answer.")};
  return c;
}

}  // namespace

TEST(HttpWire, RequestShape) {
  GenerationSettings gs{0.0, 64, "some-model"};
  const auto j = json::parse(build_chat_request(two_turns(), gs));
  EXPECT_EQ(j["model"], "some-model");
  EXPECT_EQ(j["temperature"], 0.0);
  EXPECT_EQ(j["max_tokens"], 64);
  ASSERT_EQ(j["messages"].size(), 3u);
  const auto& first = j["messages"][0];
  EXPECT_EQ(first["role"], "user");
  ASSERT_TRUE(first["content"].is_array());
  EXPECT_EQ(first["content"][0]["type"], "image_url");
  EXPECT_EQ(first["content"][0]["image_url"]["url"], "data:image/png;base64,iVBORw0KGgo=");
  EXPECT_EQ(first["content"][1]["type"], "text");
  EXPECT_EQ(first["content"][1]["text"], "What is shown?\nA. cat");
  EXPECT_EQ(j["messages"][1]["role"], "assistant");
  EXPECT_EQ(j["messages"][1]["content"], "The answer is A.");
  EXPECT_EQ(j["messages"][2]["content"], "Review your answer.");
}

TEST(HttpWire, ImageUrls) {
  EXPECT_EQ(image_wire_url(ImageRef{ImageKind::Url, "https://x.invalid/a.png"}), "https://x.invalid/a.png");
  EXPECT_EQ(image_wire_url(ImageRef{ImageKind::Base64, "/9j/4AAQ"}), "data:image/jpeg;base64,/9j/4AAQ");
  scl::testing::TempDir dir;
  {
    std::ofstream f(dir / "pic.jpg", std::ios::binary);
    f << "hello";
  }
  EXPECT_EQ(image_wire_url(ImageRef{ImageKind::Path, (dir / "pic.jpg").string()}), "data:image/jpeg;base64,aGVsbG8=");
}

TEST(HttpWire, Base64KnownVectors) {
  EXPECT_EQ(base64_encode(""), "");
  EXPECT_EQ(base64_encode("f"), "Zg==");
  EXPECT_EQ(base64_encode("fo"), "Zm8=");
  EXPECT_EQ(base64_encode("foo"), "Zm9v");
  EXPECT_EQ(base64_encode("foobar"), "Zm9vYmFy");
}

TEST(HttpWire, CompletionParsing) {
  EXPECT_EQ(extract_completion_text(completion("B")), "B");
  EXPECT_THROW(extract_completion_text(completion("")), BackendError);
  EXPECT_THROW(extract_completion_text("{\"choices\":[]}"), BackendError);
  EXPECT_THROW(extract_completion_text("<html>"), BackendError);
}

TEST(HttpBackend, ReturnsCompletionText) {
  FakeServer server([](const httplib::Request&, httplib::Response& res) {
    res.set_content(completion("The answer is **B**."), "application/json");
  });
  HttpBackend backend(fast_config(server.base_url()));
  EXPECT_EQ(backend.complete(two_turns(), GenerationSettings{0.0, 32, "m"}), "The answer is **B**.");
  ASSERT_EQ(server.bodies().size(), 1u);
  EXPECT_EQ(json::parse(server.bodies()[0])["model"], "m");
  EXPECT_EQ(server.auth()[0], "");
}

TEST(HttpBackend, RetriesServerErrorsThenGivesUp) {
  FakeServer server([](const httplib::Request&, httplib::Response& res) {
    res.status = 500;
    res.set_content("boom", "text/plain");
  });
  HttpBackend backend(fast_config(server.base_url()));
  try {
    backend.complete(two_turns(), {});
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.attempts(), 3);
    EXPECT_EQ(e.status(), 500);
    EXPECT_EQ(e.kind(), ErrorKind::Backend);
  }
  EXPECT_EQ(server.hits(), 3);
}

TEST(HttpBackend, RecoversAfterTransientFailure) {
  std::atomic<int> calls{0};
  FakeServer server([&](const httplib::Request&, httplib::Response& res) {
    if (calls++ == 0) {
      res.status = 429;
      return;
    }
    res.set_content(completion("ok"), "application/json");
  });
  HttpBackend backend(fast_config(server.base_url()));
  EXPECT_EQ(backend.complete(two_turns(), {}), "ok");
  EXPECT_EQ(server.hits(), 2);
}

TEST(HttpBackend, ClientErrorIsNotRetried) {
  FakeServer server([](const httplib::Request&, httplib::Response& res) {
    res.status = 400;
    res.set_content("bad request", "text/plain");
  });
  HttpBackend backend(fast_config(server.base_url()));
  try {
    backend.complete(two_turns(), {});
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.attempts(), 1);
    EXPECT_EQ(e.status(), 400);
  }
  EXPECT_EQ(server.hits(), 1);
}

TEST(HttpBackend, EmptyCompletionIsError) {
  FakeServer server([](const httplib::Request&, httplib::Response& res) {
    res.set_content(completion(""), "application/json");
  });
  HttpBackend backend(fast_config(server.base_url()));
  EXPECT_THROW(backend.complete(two_turns(), {}), BackendError);
}

TEST(HttpBackend, SendsBearerToken) {
  FakeServer server([](const httplib::Request&, httplib::Response& res) {
    res.set_content(completion("x"), "application/json");
  });
  auto cfg = fast_config(server.base_url());
  cfg.api_key_env = "SCL_TEST_HTTP_KEY";
  ::setenv("SCL_TEST_HTTP_KEY", "sekret", 1);
  HttpBackend backend(cfg);
  backend.complete(two_turns(), {});
  ::unsetenv("SCL_TEST_HTTP_KEY");
  EXPECT_EQ(server.auth().at(0), "Bearer sekret");
}

TEST(HttpBackend, UnreachableServerCountsAllAttempts) {
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  auto cfg = fast_config("http://127.0.0.1:" + std::to_string(port) + "/v1");
  cfg.timeout = std::chrono::milliseconds(500);
  HttpBackend backend(cfg);
  try {
    backend.complete(two_turns(), {});
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.attempts(), 3);
    EXPECT_EQ(e.status(), 0);
  }
}

TEST(HttpBackend, RejectsBadConfig) {
  EXPECT_THROW(HttpBackend(HttpBackendConfig{.base_url = "localhost:8000"}), UsageError);
  EXPECT_THROW(HttpBackend(HttpBackendConfig{.base_url = "http://h/v1", .parallelism = 0}), UsageError);
}
