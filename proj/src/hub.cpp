#include "tabi/hub.hpp"

#include <condition_variable>
#include <deque>
#include <random>
#include <thread>

#include <spdlog/spdlog.h>

#include "tabi/error.hpp"
#include "tabi/text.hpp"
#include "tabi/transcript.hpp"

namespace tabi {

struct SessionHub::Runtime {
  Runtime(std::string id, Session s) : session_id(std::move(id)), session(std::move(s)) {}

  std::string session_id;
  Session session;  // touched only by the worker after creation

  mutable std::mutex mutex;
  mutable std::condition_variable cv;
  std::deque<std::string> queue;
  bool busy = false;
  bool stopping = false;
  std::vector<WireMessage> log;
  std::uint64_t last_seq = 0;
  std::map<int, Subscriber> subscribers;
  int next_subscriber = 1;
  SessionState state;
  DisplayState display;
  std::unique_ptr<TranscriptWriter> writer;
  std::thread worker;

  // caller holds mutex
  void publish_locked(MessageKind kind, nlohmann::json payload) {
    WireMessage m{kind, session_id, ++last_seq, std::move(payload)};
    log.push_back(m);
    for (auto& [id, sub] : subscribers) {
      try {
        sub(m);
      } catch (const std::exception& e) {
        spdlog::warn("subscriber failed: {}", e.what());
      }
    }
  }

  void publish(MessageKind kind, nlohmann::json payload) {
    std::lock_guard lock(mutex);
    publish_locked(kind, std::move(payload));
  }

  nlohmann::json snapshot_locked() const {
    auto j = state_snapshot(state);
    j["session_id"] = session_id;
    j["phase_name"] = phase_name(state.current_phase);
    j["history"] = nlohmann::json::array();
    for (const auto& t : state.history) j["history"].push_back(to_json(t));
    j["selected_courses"] = nlohmann::json::array();
    for (const auto& c : state.selected_courses) j["selected_courses"].push_back(c.course_id);
    j["decided_spots"] = nlohmann::json::array();
    for (const auto& s : state.decided_spots) j["decided_spots"].push_back(s.name);
    j["plan"] = state.final_plan ? to_json(*state.final_plan) : nlohmann::json(nullptr);
    j["display"] = to_json(display);
    j["seq"] = last_seq;
    return j;
  }

  void record(const TurnResult& result) {
    if (!writer) return;
    try {
      for (const auto& r : turn_records(session, result)) writer->append(r);
    } catch (const std::exception& e) {
      spdlog::warn("transcript write failed for {}: {}", session_id, e.what());
    }
  }

  void publish_turn(const TurnResult& result) {
    std::lock_guard lock(mutex);
    state = session.state();
    display = session.display();
    publish_locked(MessageKind::display_state, to_json(result.display));
    for (const auto& cue : result.cues) publish_locked(MessageKind::action_cue, cue_payload(cue));
    if (result.phase_change) {
      publish_locked(MessageKind::phase_changed, phase_changed_payload(*result.phase_change));
    }
    if (result.status == SessionStatus::closed) {
      nlohmann::json p;
      p["plan"] = state.final_plan ? to_json(*state.final_plan) : nlohmann::json(nullptr);
      publish_locked(MessageKind::session_closed, std::move(p));
    } else if (result.status == SessionStatus::failed) {
      publish_locked(MessageKind::error, error_payload("session-failed", result.failure.value_or("")));
    }
  }

  SegmentSink segment_sink(int turn) {
    return [this, turn](const SpeechSegment& seg) {
      publish(MessageKind::speech_segment, segment_payload(seg, turn));
    };
  }

  void run() {
    for (;;) {
      std::string text;
      {
        std::unique_lock lock(mutex);
        cv.wait(lock, [&] { return stopping || !queue.empty(); });
        if (stopping) return;
        text = std::move(queue.front());
        queue.pop_front();
        busy = true;
      }
      process(text);
      {
        std::lock_guard lock(mutex);
        busy = false;
      }
      cv.notify_all();
    }
  }

  void process(const std::string& text) {
    if (session.state().status != SessionStatus::active) {
      publish(MessageKind::error, error_payload(to_string(ErrorCode::session_not_active), "session is not active"));
      return;
    }
    const int turn = static_cast<int>(session.state().history.size()) + 1;
    {
      nlohmann::json p;
      p["text"] = text;
      p["turn"] = turn - 1;
      publish(MessageKind::customer_utterance, std::move(p));
    }
    try {
      const auto result = session.advance(text, segment_sink(turn));
      record(result);
      publish_turn(result);
    } catch (const Error& e) {
      spdlog::warn("turn failed for {}: {}", session_id, e.what());
      publish(MessageKind::error, error_payload(to_string(e.code()), e.what()));
    } catch (const std::exception& e) {
      spdlog::error("turn failed for {}: {}", session_id, e.what());
      publish(MessageKind::error, error_payload("internal", e.what()));
    }
  }
};

SessionHub::Subscription::Subscription(Subscription&& other) noexcept
    : runtime_(std::move(other.runtime_)), id_(other.id_) {}

SessionHub::Subscription& SessionHub::Subscription::operator=(Subscription&& other) noexcept {
  if (this != &other) {
    reset();
    runtime_ = std::move(other.runtime_);
    id_ = other.id_;
  }
  return *this;
}

SessionHub::Subscription::~Subscription() { reset(); }

void SessionHub::Subscription::reset() {
  if (!runtime_) return;
  {
    std::lock_guard lock(runtime_->mutex);
    runtime_->subscribers.erase(id_);
  }
  runtime_.reset();
}

namespace {

std::string new_session_id() {
  static std::mutex m;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(m);
  static constexpr char hex[] = "0123456789abcdef";
  std::string id(16, '0');
  auto v = rng();
  for (auto& c : id) {
    c = hex[v & 0xF];
    v >>= 4;
  }
  return id;
}

}  // namespace

SessionHub::SessionHub(std::shared_ptr<const Resources> resources, BackendFactory factory, HubOptions options)
    : resources_(std::move(resources)), factory_(std::move(factory)), options_(std::move(options)) {
  if (!resources_ || !factory_) throw Error(ErrorCode::invalid_argument, "hub needs resources and a backend factory");
}

SessionHub::~SessionHub() {
  std::map<std::string, std::shared_ptr<Runtime>> sessions;
  {
    std::lock_guard lock(mutex_);
    sessions.swap(sessions_);
  }
  for (auto& [id, rt] : sessions) {
    {
      std::lock_guard lock(rt->mutex);
      rt->stopping = true;
    }
    rt->cv.notify_all();
  }
  for (auto& [id, rt] : sessions) {
    if (rt->worker.joinable()) rt->worker.join();
  }
}

SessionHub::Created SessionHub::create_session() {
  std::string id;
  {
    std::lock_guard lock(mutex_);
    if (active_sessions_locked_count() >= options_.max_sessions) {
      throw Error(ErrorCode::capacity_exceeded, "session capacity reached");
    }
    do {
      id = new_session_id();
    } while (sessions_.count(id));
  }
  auto rt = std::make_shared<Runtime>(id, Session(id, resources_, factory_(), options_.handle));
  const auto result = rt->session.start(rt->segment_sink(0));
  if (options_.log_dir) {
    std::filesystem::create_directories(*options_.log_dir);
    rt->writer = std::make_unique<TranscriptWriter>(*options_.log_dir / (id + ".jsonl"));
  }
  rt->record(result);
  rt->publish_turn(result);
  Created created{id, rt->log};
  {
    std::lock_guard lock(mutex_);
    if (active_sessions_locked_count() >= options_.max_sessions) {
      throw Error(ErrorCode::capacity_exceeded, "session capacity reached");
    }
    sessions_.emplace(id, rt);
  }
  rt->worker = std::thread([rt] { rt->run(); });
  spdlog::info("session {} created", id);
  return created;
}

std::size_t SessionHub::active_sessions_locked_count() const {
  std::size_t n = 0;
  for (const auto& [id, rt] : sessions_) {
    std::lock_guard lock(rt->mutex);
    if (rt->state.status == SessionStatus::active) ++n;
  }
  return n;
}

std::shared_ptr<SessionHub::Runtime> SessionHub::find(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw Error(ErrorCode::unknown_session, "unknown session: " + session_id);
  return it->second;
}

void SessionHub::post_utterance(const std::string& session_id, std::string text) {
  auto rt = find(session_id);
  if (text::trim(text).empty()) throw Error(ErrorCode::utterance_rejected, "empty utterance");
  {
    std::lock_guard lock(rt->mutex);
    if (rt->state.status != SessionStatus::active) {
      throw Error(ErrorCode::session_not_active, "session is " + std::string(to_string(rt->state.status)));
    }
    rt->queue.push_back(std::move(text));
  }
  rt->cv.notify_all();
}

void SessionHub::publish_error(const std::string& session_id, std::string_view code, std::string_view message) {
  find(session_id)->publish(MessageKind::error, error_payload(code, message));
}

SessionHub::Subscription SessionHub::subscribe(const std::string& session_id,
                                               std::optional<std::uint64_t> after_seq, Subscriber subscriber) {
  auto rt = find(session_id);
  std::lock_guard lock(rt->mutex);
  if (after_seq) {
    for (const auto& m : rt->log) {
      if (m.seq > *after_seq) subscriber(m);
    }
  } else {
    subscriber(WireMessage{MessageKind::snapshot, session_id, rt->last_seq, rt->snapshot_locked()});
  }
  const int id = rt->next_subscriber++;
  rt->subscribers.emplace(id, std::move(subscriber));
  return Subscription(rt, id);
}

bool SessionHub::contains(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  return sessions_.count(session_id) > 0;
}

std::vector<WireMessage> SessionHub::messages(const std::string& session_id) const {
  auto rt = find(session_id);
  std::lock_guard lock(rt->mutex);
  return rt->log;
}

nlohmann::json SessionHub::snapshot(const std::string& session_id) const {
  auto rt = find(session_id);
  std::lock_guard lock(rt->mutex);
  return rt->snapshot_locked();
}

SessionState SessionHub::state(const std::string& session_id) const {
  auto rt = find(session_id);
  std::lock_guard lock(rt->mutex);
  return rt->state;
}

DisplayState SessionHub::display(const std::string& session_id) const {
  auto rt = find(session_id);
  std::lock_guard lock(rt->mutex);
  return rt->display;
}

void SessionHub::wait_idle(const std::string& session_id) const {
  auto rt = find(session_id);
  std::unique_lock lock(rt->mutex);
  rt->cv.wait(lock, [&] { return rt->stopping || (rt->queue.empty() && !rt->busy); });
}

std::size_t SessionHub::active_sessions() const {
  std::lock_guard lock(mutex_);
  return active_sessions_locked_count();
}

std::size_t SessionHub::session_count() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

}  // namespace tabi
