#include <gtest/gtest.h>
#include <arpa/inet.h>
#include <httplib.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <nlohmann/json.hpp>
#include <thread>

#include "tabi/error.hpp"
#include "tabi/llm.hpp"

using namespace tabi;

namespace {

RenderedPrompt prompt() { return {"main", "persona\n---\n===\n===\nCustomer: こんにちは\nShoko:", "Shoko:", 1}; }

std::string sse(const std::string& content) {
  nlohmann::json j{{"choices", {{{"delta", {{"content", content}}}}}}};
  return "data: " + j.dump() + "\n\n";
}

// Local chat-completions stand-in that streams server-sent events.
class FakeCompletionServer {
 public:
  FakeCompletionServer() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests;
      last_body = req.body;
      last_auth = req.get_header_value("Authorization");
      if (mode == "status500") {
        res.status = 500;
        res.set_content("{\"error\":\"overloaded\"}", "application/json");
        return;
      }
      if (mode == "status400") {
        res.status = 400;
        res.set_content("{\"error\":\"bad request\"}", "application/json");
        return;
      }
      if (mode == "slow") std::this_thread::sleep_for(std::chrono::milliseconds(800));
      res.set_chunked_content_provider("text/event-stream", [this](size_t, httplib::DataSink& sink) {
        std::string out;
        if (mode == "garbage") {
          out = "data: {not json\n\n";
        } else {
          out = ": keep-alive\n\n" + sse("こんに") + sse("ちは。") + sse("[EN") + sse("D]");
          if (mode != "no_done") out += "data: [DONE]\n\n";
        }
        // Deliver in awkward slices so events straddle reads.
        for (std::size_t i = 0; i < out.size(); i += 7) sink.write(out.data() + i, std::min<std::size_t>(7, out.size() - i));
        sink.done();
        return true;
      });
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeCompletionServer() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }

  std::string mode = "ok";
  std::atomic<int> requests{0};
  std::string last_body;
  std::string last_auth;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

RemoteBackendOptions options_for(const std::string& endpoint) {
  RemoteBackendOptions o;
  o.endpoint = endpoint;
  o.api_key = "test-key";
  o.timeout = std::chrono::milliseconds(2000);
  return o;
}

}  // namespace

TEST(RemoteBackend, StreamsDeltasUntilDone) {
  FakeCompletionServer server;
  LlmGateway gw(std::make_unique<RemoteBackend>(options_for(server.endpoint())), {BackendKind::remote});
  std::vector<TokenChunk> chunks;
  const auto text = gw.complete_streaming(prompt(), [&](const TokenChunk& c) { chunks.push_back(c); });
  EXPECT_EQ(text, "こんにちは。[END]");
  ASSERT_FALSE(chunks.empty());
  EXPECT_TRUE(chunks.back().final);
  EXPECT_EQ(server.requests.load(), 1);
  EXPECT_EQ(server.last_auth, "Bearer test-key");
  const auto body = nlohmann::json::parse(server.last_body);
  EXPECT_EQ(body["model"], "gpt-4-32k-0613");
  EXPECT_EQ(body["stream"], true);
  EXPECT_EQ(body["messages"][0]["content"], prompt().text);
}

TEST(RemoteBackend, SpeechNeverCarriesTheSign) {
  FakeCompletionServer server;
  LlmGateway gw(std::make_unique<RemoteBackend>(options_for(server.endpoint())), {BackendKind::remote});
  std::vector<std::string> segs;
  gw.stream_speech(prompt(), PunctuationSet(), [&](const SpeechSegment& s) { segs.push_back(s.text); });
  EXPECT_EQ(segs, std::vector<std::string>{"こんにちは。"});
}

TEST(RemoteBackend, NetworkDownGivesUnavailableAfterTwoAttempts) {
  // grab a free port and close it again so nothing listens there
  int port = 0;
  {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    ASSERT_EQ(::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr), 0);
    socklen_t len = sizeof addr;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    port = ntohs(addr.sin_port);
    ::close(fd);
  }
  BackendHandle h{BackendKind::remote};
  h.max_retries = 1;
  LlmGateway gw(std::make_unique<RemoteBackend>(options_for("http://127.0.0.1:" + std::to_string(port))), h);
  try {
    gw.complete(prompt());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::backend_unavailable);
  }
  EXPECT_EQ(gw.last_attempts(), 2);
}

TEST(RemoteBackend, ServerErrorsAreRetriedClientErrorsAreMalformed) {
  FakeCompletionServer server;
  server.mode = "status500";
  LlmGateway gw(std::make_unique<RemoteBackend>(options_for(server.endpoint())), {BackendKind::remote});
  try {
    gw.complete(prompt());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::backend_unavailable);
  }
  EXPECT_EQ(server.requests.load(), 2);

  server.mode = "status400";
  try {
    gw.complete(prompt());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::malformed_response);
  }
}

TEST(RemoteBackend, GarbageAndTruncatedStreamsAreMalformed) {
  FakeCompletionServer server;
  LlmGateway gw(std::make_unique<RemoteBackend>(options_for(server.endpoint())), {BackendKind::remote});
  for (const char* mode : {"garbage", "no_done"}) {
    server.mode = mode;
    try {
      gw.complete(prompt());
      FAIL() << mode;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::malformed_response) << mode;
    }
  }
}

TEST(RemoteBackend, SlowServerTimesOut) {
  FakeCompletionServer server;
  server.mode = "slow";
  auto o = options_for(server.endpoint());
  o.timeout = std::chrono::milliseconds(200);
  BackendHandle h{BackendKind::remote};
  h.max_retries = 0;
  LlmGateway gw(std::make_unique<RemoteBackend>(o), h);
  try {
    gw.complete(prompt());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::backend_timeout);
  }
}

TEST(RemoteBackend, DrainEventsKeepsPartialLines) {
  std::string buffer = "data: {\"choices\":[{\"delta\":{\"content\":\"あ\"}}]}\n\ndata: {\"choi";
  std::string got;
  EXPECT_FALSE(RemoteBackend::drain_events(buffer, [&](const TokenChunk& c) { got += c.text; }));
  EXPECT_EQ(got, "あ");
  EXPECT_EQ(buffer, "data: {\"choi");
  buffer += "ces\":[{\"delta\":{}}]}\n\ndata: [DONE]\n";
  bool final = false;
  EXPECT_TRUE(RemoteBackend::drain_events(buffer, [&](const TokenChunk& c) { final |= c.final; }));
  EXPECT_TRUE(final);
  EXPECT_THROW(RemoteBackend({}), Error);
}
