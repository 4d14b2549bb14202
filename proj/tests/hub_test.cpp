#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "support.hpp"
#include "tabi/error.hpp"
#include "tabi/hub.hpp"
#include "tabi/transcript.hpp"

using namespace tabi;
using support::PromptAwareBackend;

namespace {

std::vector<std::string> kinds(const std::vector<WireMessage>& ms) {
  std::vector<std::string> out;
  for (const auto& m : ms) out.emplace_back(to_string(m.kind));
  return out;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::invalid_argument;
}

BackendFactory prompt_aware(bool sign = false, std::string reply = "なるほど、そうなんですね。") {
  return [sign, reply] {
    auto b = std::make_unique<PromptAwareBackend>(reply);
    b->set_sign_every_turn(sign);
    return b;
  };
}

// Counts overlapping stream() calls across every instance it creates.
struct OverlapProbe {
  std::atomic<int> in_flight{0};
  std::atomic<int> max_in_flight{0};
  std::atomic<int> calls{0};
};

class SlowBackend : public Backend {
 public:
  explicit SlowBackend(OverlapProbe& probe) : probe_(probe) {}
  void stream(const RenderedPrompt& p, const ChunkSink& sink) override {
    const int now = ++probe_.in_flight;
    int prev = probe_.max_in_flight.load();
    while (now > prev && !probe_.max_in_flight.compare_exchange_weak(prev, now)) {
    }
    ++probe_.calls;
    const std::string text = p.template_id == kCourseSelectionTemplate ? "IDS: C02, C05" : "ゆっくり、話します。";
    sink({text.substr(0, 12), false});
    std::this_thread::sleep_for(std::chrono::milliseconds(60));
    sink({text.substr(12), true});
    --probe_.in_flight;
  }

 private:
  OverlapProbe& probe_;
};

/// Checks the per-turn message contract on a session log.
void expect_well_ordered(const std::vector<WireMessage>& log) {
  for (std::size_t i = 1; i < log.size(); ++i) ASSERT_LT(log[i - 1].seq, log[i].seq);
  // each customer_utterance opens a block: segments, display_state, cues,
  // phase change, then close or error
  std::size_t i = 0;
  auto at = [&](std::size_t k) { return log[k].kind; };
  while (i < log.size()) {
    if (at(i) == MessageKind::error) {
      ++i;
      continue;
    }
    if (at(i) == MessageKind::customer_utterance) ++i;
    std::size_t segs = 0;
    while (i < log.size() && at(i) == MessageKind::speech_segment) {
      ++segs;
      ++i;
    }
    if (i < log.size() && at(i) == MessageKind::error) continue;  // turn failed in the backend
    ASSERT_LT(i, log.size());
    ASSERT_GE(segs, 1u);
    ASSERT_EQ(at(i), MessageKind::display_state) << i;
    ++i;
    while (i < log.size() && at(i) == MessageKind::action_cue) ++i;
    if (i < log.size() && at(i) == MessageKind::phase_changed) ++i;
    if (i < log.size() && (at(i) == MessageKind::session_closed || at(i) == MessageKind::error)) ++i;
  }
}

}  // namespace

TEST(SessionHub, CreateStreamsGreetingAndBow) {
  SessionHub hub(support::fixture_resources(), prompt_aware());
  const auto created = hub.create_session();
  EXPECT_EQ(created.session_id.size(), 16u);
  const auto k = kinds(created.messages);
  ASSERT_GE(k.size(), 3u);
  EXPECT_EQ(k.front(), "speech_segment");
  EXPECT_EQ(k[k.size() - 2], "display_state");
  EXPECT_EQ(k.back(), "action_cue");
  EXPECT_EQ(created.messages.back().payload["cue"], "bow");
  EXPECT_EQ(created.messages.front().seq, 1u);
  const auto st = hub.state(created.session_id);
  EXPECT_EQ(st.current_phase, PhaseId::introduction);
  EXPECT_EQ(st.turns_in_phase, 0);
  EXPECT_EQ(hub.active_sessions(), 1u);
}

TEST(SessionHub, UtteranceProducesOrderedTurnBlock) {
  SessionHub hub(support::fixture_resources(), prompt_aware());
  const auto id = hub.create_session().session_id;
  const auto before = hub.messages(id).size();
  hub.post_utterance(id, "こんにちは");
  hub.wait_idle(id);
  const auto log = hub.messages(id);
  const std::vector<WireMessage> turn(log.begin() + static_cast<std::ptrdiff_t>(before), log.end());
  EXPECT_EQ(kinds(turn), (std::vector<std::string>{"customer_utterance", "speech_segment", "speech_segment",
                                                   "display_state"}));
  EXPECT_EQ(turn[0].payload["text"], "こんにちは");
  EXPECT_EQ(turn[1].payload["text"], "なるほど、");
  EXPECT_EQ(turn[1].payload["turn"], 2);
  EXPECT_EQ(turn[2].payload["terminal"], false);
  expect_well_ordered(log);
}

TEST(SessionHub, ValidationErrors) {
  HubOptions opts;
  SessionHub hub(support::fixture_resources(), prompt_aware(true, "はい。"), opts);
  const auto id = hub.create_session().session_id;
  EXPECT_EQ(code_of([&] { hub.post_utterance("nope", "x"); }), ErrorCode::unknown_session);
  EXPECT_EQ(code_of([&] { hub.post_utterance(id, "  "); }), ErrorCode::utterance_rejected);
  EXPECT_EQ(code_of([&] { hub.subscribe("nope", std::nullopt, [](const WireMessage&) {}); }),
            ErrorCode::unknown_session);
  for (int i = 0; i < 5; ++i) hub.post_utterance(id, "はい");
  hub.wait_idle(id);
  EXPECT_EQ(hub.state(id).status, SessionStatus::closed);
  EXPECT_EQ(code_of([&] { hub.post_utterance(id, "もう一度"); }), ErrorCode::session_not_active);
  const auto log = hub.messages(id);
  EXPECT_EQ(log.back().kind, MessageKind::session_closed);
  EXPECT_EQ(log.back().payload["plan"]["spots"].size(), 2u);
  expect_well_ordered(log);
}

TEST(SessionHub, QueuedAfterCloseIsReportedOnTheStream) {
  SessionHub hub(support::fixture_resources(), prompt_aware(true, "はい。"));
  const auto id = hub.create_session().session_id;
  for (int i = 0; i < 7; ++i) {
    try {
      hub.post_utterance(id, "はい");
    } catch (const Error&) {
      // closed before the later posts arrived
    }
  }
  hub.wait_idle(id);
  EXPECT_EQ(hub.state(id).status, SessionStatus::closed);
  int closed = 0;
  for (const auto& m : hub.messages(id)) closed += m.kind == MessageKind::session_closed;
  EXPECT_EQ(closed, 1);
}

TEST(SessionHub, CapacityIsEnforcedOnActiveSessions) {
  HubOptions opts;
  opts.max_sessions = 2;
  SessionHub hub(support::fixture_resources(), prompt_aware(true, "はい。"), opts);
  const auto a = hub.create_session().session_id;
  hub.create_session();
  EXPECT_EQ(code_of([&] { hub.create_session(); }), ErrorCode::capacity_exceeded);
  for (int i = 0; i < 5; ++i) hub.post_utterance(a, "はい");
  hub.wait_idle(a);
  ASSERT_EQ(hub.state(a).status, SessionStatus::closed);
  EXPECT_NO_THROW(hub.create_session());
  EXPECT_EQ(hub.session_count(), 3u);
}

TEST(SessionHub, GreetingFailureCreatesNothing) {
  SessionHub hub(support::fixture_resources(), [] {
    return std::make_unique<ScriptedBackend>(std::vector<ScriptEntry>{{"", ErrorCode::backend_unavailable},
                                                                     {"", ErrorCode::backend_unavailable}});
  });
  EXPECT_EQ(code_of([&] { hub.create_session(); }), ErrorCode::backend_unavailable);
  EXPECT_EQ(hub.session_count(), 0u);
}

TEST(SessionHub, RapidUtterancesNeverInterleave) {
  OverlapProbe probe;
  SessionHub hub(support::fixture_resources(), [&probe] { return std::make_unique<SlowBackend>(probe); });
  const auto id = hub.create_session().session_id;
  std::thread t1([&] { hub.post_utterance(id, "一つ目"); });
  std::thread t2([&] { hub.post_utterance(id, "二つ目"); });
  t1.join();
  t2.join();
  hub.post_utterance(id, "三つ目");
  hub.wait_idle(id);
  EXPECT_EQ(probe.max_in_flight.load(), 1);
  EXPECT_EQ(probe.calls.load(), 4);  // greeting + three turns
  const auto log = hub.messages(id);
  expect_well_ordered(log);
  std::vector<std::string> order;
  for (const auto& m : log) {
    if (m.kind == MessageKind::customer_utterance) order.push_back(m.payload["text"]);
  }
  ASSERT_EQ(order.size(), 3u);
  EXPECT_EQ(order[2], "三つ目");
  EXPECT_EQ(hub.state(id).turns_in_phase, 0);  // third exchange hit the phase-1 cap
  EXPECT_EQ(hub.state(id).current_phase, PhaseId::inquiry);
}

TEST(SessionHub, SessionsRunInParallel) {
  OverlapProbe probe;
  SessionHub hub(support::fixture_resources(), [&probe] { return std::make_unique<SlowBackend>(probe); });
  std::vector<std::string> ids;
  for (int i = 0; i < 4; ++i) ids.push_back(hub.create_session().session_id);
  for (const auto& id : ids) hub.post_utterance(id, "こんにちは");
  for (const auto& id : ids) hub.wait_idle(id);
  EXPECT_GT(probe.max_in_flight.load(), 1);
  for (const auto& id : ids) expect_well_ordered(hub.messages(id));
}

TEST(SessionHub, SubscribeSnapshotOrBacklog) {
  SessionHub hub(support::fixture_resources(), prompt_aware());
  const auto id = hub.create_session().session_id;
  std::vector<WireMessage> fresh, resumed;
  std::mutex m;
  auto a = hub.subscribe(id, std::nullopt, [&](const WireMessage& msg) {
    std::lock_guard lock(m);
    fresh.push_back(msg);
  });
  auto b = hub.subscribe(id, 0, [&](const WireMessage& msg) {
    std::lock_guard lock(m);
    resumed.push_back(msg);
  });
  const auto greeting = hub.messages(id);
  {
    std::lock_guard lock(m);
    ASSERT_EQ(fresh.size(), 1u);
    EXPECT_EQ(fresh[0].kind, MessageKind::snapshot);
    EXPECT_EQ(fresh[0].seq, greeting.back().seq);
    EXPECT_EQ(fresh[0].payload["phase"], 1);
    EXPECT_EQ(fresh[0].payload["history"].size(), 1u);
    EXPECT_EQ(resumed.size(), greeting.size());
  }
  hub.post_utterance(id, "こんにちは");
  hub.wait_idle(id);
  a.reset();
  hub.post_utterance(id, "もう一度");
  hub.wait_idle(id);
  const auto log = hub.messages(id);
  std::lock_guard lock(m);
  EXPECT_EQ(resumed.size(), log.size());
  for (std::size_t i = 0; i < log.size(); ++i) EXPECT_EQ(resumed[i].seq, log[i].seq);
  EXPECT_EQ(fresh.size(), 1u + 4u);  // snapshot + one turn, then unsubscribed
}

TEST(SessionHub, BackendErrorIsPublishedAndSessionStaysActive) {
  SessionHub hub(support::fixture_resources(), [] {
    return std::make_unique<ScriptedBackend>(support::script_of({"いらっしゃいませ。", "!unavailable",
                                                                 "!unavailable", "はい、どうぞ。"}));
  });
  const auto id = hub.create_session().session_id;
  hub.post_utterance(id, "こんにちは");
  hub.wait_idle(id);
  auto log = hub.messages(id);
  EXPECT_EQ(log.back().kind, MessageKind::error);
  EXPECT_EQ(log.back().payload["code"], "backend-unavailable");
  EXPECT_EQ(hub.state(id).status, SessionStatus::active);
  hub.post_utterance(id, "こんにちは");
  hub.wait_idle(id);
  log = hub.messages(id);
  EXPECT_EQ(log.back().kind, MessageKind::display_state);
  EXPECT_EQ(hub.state(id).history.back().text, "はい、どうぞ。");
  expect_well_ordered(log);
}

TEST(SessionHub, TranscriptIsWrittenAndReplays) {
  const auto dir = std::filesystem::temp_directory_path() / ("tabi_hub_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::string id;
  {
    HubOptions opts;
    opts.log_dir = dir;
    SessionHub hub(support::fixture_resources(), prompt_aware(true, "清水寺はいかがですか。"), opts);
    id = hub.create_session().session_id;
    for (int i = 0; i < 5; ++i) hub.post_utterance(id, "はい");
    hub.wait_idle(id);
    ASSERT_EQ(hub.state(id).status, SessionStatus::closed);
  }
  const auto records = read_transcript(dir / (id + ".jsonl"));
  EXPECT_EQ(records.size(), 11u);
  const auto result = replay(records, support::fixture_resources());
  EXPECT_TRUE(result.matches_log());
  EXPECT_EQ(result.state.status, SessionStatus::closed);
  std::filesystem::remove_all(dir);
}
