#include <httplib.h>

#include <chrono>
#include <nlohmann/json.hpp>

#include "tabi/llm.hpp"
#include "tabi/text.hpp"

namespace tabi {

RemoteBackend::RemoteBackend(RemoteBackendOptions options) : options_(std::move(options)) {
  if (options_.endpoint.empty()) {
    throw Error(ErrorCode::config_error, "remote backend needs an endpoint");
  }
}

bool RemoteBackend::drain_events(std::string& buffer, const ChunkSink& on_chunk) {
  while (true) {
    const auto nl = buffer.find('\n');
    if (nl == std::string::npos) return false;
    std::string line = buffer.substr(0, nl);
    buffer.erase(0, nl + 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == ':') continue;
    if (line.rfind("data:", 0) != 0) continue;  // event:, id:, retry: are not used
    const auto payload = std::string(text::trim(std::string_view(line).substr(5)));
    if (payload == "[DONE]") {
      if (on_chunk) on_chunk({"", true});
      return true;
    }
    const auto json = nlohmann::json::parse(payload, nullptr, false);
    if (json.is_discarded() || !json.is_object()) {
      throw Error(ErrorCode::malformed_response, "unparseable stream event");
    }
    const auto choices = json.find("choices");
    if (choices == json.end() || !choices->is_array() || choices->empty()) continue;
    const auto& delta = (*choices)[0].value("delta", nlohmann::json::object());
    const auto content = delta.find("content");
    if (content != delta.end() && content->is_string() && on_chunk) {
      on_chunk({content->get<std::string>(), false});
    }
  }
}

void RemoteBackend::stream(const RenderedPrompt& prompt, const ChunkSink& on_chunk) {
  httplib::Client client(options_.endpoint);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());

  nlohmann::json body{
      {"model", options_.model_id},
      {"stream", true},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt.text}}})},
  };

  httplib::Request req;
  req.method = "POST";
  req.path = options_.path;
  req.set_header("Content-Type", "application/json");
  req.set_header("Accept", "text/event-stream");
  if (!options_.api_key.empty()) req.set_header("Authorization", "Bearer " + options_.api_key);
  req.body = body.dump();

  std::string buffer;
  bool done = false;
  std::optional<Error> stream_error;
  req.content_receiver = [&](const char* data, size_t length, uint64_t, uint64_t) {
    buffer.append(data, length);
    try {
      done = drain_events(buffer, on_chunk) || done;
    } catch (const Error& e) {
      stream_error = e;
      return false;
    }
    return !done;
  };

  const auto started = std::chrono::steady_clock::now();
  httplib::Response res;
  httplib::Error err = httplib::Error::Success;
  const bool ok = client.send(req, res, err);
  if (stream_error) throw *stream_error;
  if (done) return;
  if (!ok && err != httplib::Error::Canceled) {
    const auto elapsed = std::chrono::steady_clock::now() - started;
    if (err == httplib::Error::ConnectionTimeout ||
        (err == httplib::Error::Read && elapsed >= options_.timeout)) {
      throw Error(ErrorCode::backend_timeout, "remote backend timed out");
    }
    throw Error(ErrorCode::backend_unavailable, "remote backend: " + httplib::to_string(err));
  }
  if (res.status >= 500 || res.status == 429) {
    throw Error(ErrorCode::backend_unavailable, "remote backend status " + std::to_string(res.status));
  }
  if (res.status != 200) {
    throw Error(ErrorCode::malformed_response, "remote backend status " + std::to_string(res.status));
  }
  throw Error(ErrorCode::malformed_response, "stream ended without [DONE]");
}

}  // namespace tabi
