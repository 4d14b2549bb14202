#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tabi/session.hpp"
#include "tabi/wire.hpp"

namespace tabi {

using BackendFactory = std::function<std::unique_ptr<Backend>()>;

struct HubOptions {
  std::size_t max_sessions = 16;
  std::optional<std::filesystem::path> log_dir;  // one transcript per session
  BackendHandle handle;
};

/// Owns live sessions. Each session has one worker thread that processes
/// queued utterances in order and publishes the resulting messages with
/// per-session sequence numbers.
class SessionHub {
 public:
  using Subscriber = std::function<void(const WireMessage&)>;
  struct Runtime;

  class Subscription {
   public:
    Subscription() = default;
    Subscription(std::shared_ptr<Runtime> runtime, int id) : runtime_(std::move(runtime)), id_(id) {}
    Subscription(Subscription&& other) noexcept;
    Subscription& operator=(Subscription&& other) noexcept;
    Subscription(const Subscription&) = delete;
    Subscription& operator=(const Subscription&) = delete;
    ~Subscription();
    void reset();

   private:
    std::shared_ptr<Runtime> runtime_;
    int id_ = 0;
  };

  struct Created {
    std::string session_id;
    std::vector<WireMessage> messages;  // greeting output
  };

  SessionHub(std::shared_ptr<const Resources> resources, BackendFactory factory, HubOptions options = {});
  ~SessionHub();
  SessionHub(const SessionHub&) = delete;
  SessionHub& operator=(const SessionHub&) = delete;

  /// Throws `capacity-exceeded` or a backend error from the greeting.
  Created create_session();

  /// Queues an utterance. Throws `unknown-session`, `session-not-active`
  /// or `utterance-rejected`; later failures are published as `error`.
  void post_utterance(const std::string& session_id, std::string text);

  /// Publishes an `error` message on the session stream.
  void publish_error(const std::string& session_id, std::string_view code, std::string_view message);

  /// Delivers every message with seq > `after_seq`, or a single `snapshot`
  /// message when `after_seq` is empty, then live messages. The callback
  /// runs under the session lock and must not block or call back into the hub.
  Subscription subscribe(const std::string& session_id, std::optional<std::uint64_t> after_seq,
                         Subscriber subscriber);

  bool contains(const std::string& session_id) const;
  std::vector<WireMessage> messages(const std::string& session_id) const;
  nlohmann::json snapshot(const std::string& session_id) const;
  SessionState state(const std::string& session_id) const;
  DisplayState display(const std::string& session_id) const;

  /// Blocks until the session's queue is drained and no turn is running.
  void wait_idle(const std::string& session_id) const;

  std::size_t active_sessions() const;
  std::size_t session_count() const;

 private:
  std::shared_ptr<Runtime> find(const std::string& session_id) const;
  std::size_t active_sessions_locked_count() const;

  std::shared_ptr<const Resources> resources_;
  BackendFactory factory_;
  HubOptions options_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Runtime>> sessions_;
};

}  // namespace tabi
