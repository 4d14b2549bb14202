#include <gtest/gtest.h>

#include "support.hpp"
#include "tabi/error.hpp"
#include "tabi/session.hpp"

using namespace tabi;
using support::PromptAwareBackend;

namespace {

std::unique_ptr<Session> make_session(std::unique_ptr<Backend> backend,
                                      std::shared_ptr<const Resources> res = support::fixture_resources()) {
  BackendHandle h;
  h.max_retries = 0;
  return std::make_unique<Session>("s1", std::move(res), std::move(backend), h);
}

bool any_sign(const TurnResult& r) {
  if (r.system_text.find("[END]") != std::string::npos) return true;
  for (const auto& s : r.segments) {
    if (s.text.find("[END]") != std::string::npos) return true;
  }
  return false;
}

// Wraps a backend and fails the next call on demand.
class Flaky : public Backend {
 public:
  explicit Flaky(std::unique_ptr<Backend> inner) : inner_(std::move(inner)) {}
  void stream(const RenderedPrompt& p, const ChunkSink& sink) override {
    if (fail_next) {
      fail_next = false;
      throw Error(ErrorCode::backend_unavailable, "down");
    }
    inner_->stream(p, sink);
  }
  bool fail_next = false;

 private:
  std::unique_ptr<Backend> inner_;
};

}  // namespace

TEST(Session, GreetingIsNotATurn) {
  auto s = make_session(std::make_unique<PromptAwareBackend>("いらっしゃいませ。"));
  const auto g = s->start();
  EXPECT_EQ(g.system_text, "いらっしゃいませ。");
  EXPECT_EQ(s->state().turns_in_phase, 0);
  ASSERT_EQ(s->state().history.size(), 1u);
  EXPECT_EQ(s->state().history[0].index, 0);
  EXPECT_EQ(g.cues, (std::vector<ActionCue>{{CueKind::bow, CueTiming::phase_entry}}));
  EXPECT_THROW(s->start(), Error);
}

TEST(Session, AdvanceBeforeStartIsRejected) {
  auto s = make_session(std::make_unique<PromptAwareBackend>());
  try {
    s->advance("こんにちは");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::session_not_active);
  }
}

TEST(Session, PhaseOneEndsByCapOnThirdExchange) {
  auto s = make_session(std::make_unique<PromptAwareBackend>());
  s->start();
  EXPECT_EQ(s->advance("こんにちは").decision, TransitionDecision::stay);
  EXPECT_EQ(s->advance("京都は初めてです").decision, TransitionDecision::stay);
  const auto r = s->advance("楽しみです");
  EXPECT_EQ(r.decision, TransitionDecision::advance_by_cap);
  ASSERT_TRUE(r.phase_change);
  EXPECT_EQ(r.phase_change->from, PhaseId::introduction);
  EXPECT_EQ(r.phase_change->to, PhaseId::inquiry);
  EXPECT_EQ(s->state().current_phase, PhaseId::inquiry);
  EXPECT_EQ(s->state().turns_in_phase, 0);
  EXPECT_EQ(s->state().history.size(), 7u);
}

TEST(Session, SignInInquiryRunsCourseSelection) {
  auto backend = std::make_unique<PromptAwareBackend>("承知しました。");
  auto* raw = backend.get();
  auto s = make_session(std::move(backend));
  s->start();
  for (int i = 0; i < 3; ++i) s->advance("はい");
  ASSERT_EQ(s->state().current_phase, PhaseId::inquiry);
  EXPECT_TRUE(s->state().selected_courses.empty());
  raw->set_sign_every_turn(true);
  const auto r = s->advance("紅葉が見たいです");
  EXPECT_EQ(r.decision, TransitionDecision::advance_by_sign);
  EXPECT_EQ(r.system_text, "承知しました。");
  EXPECT_FALSE(any_sign(r));
  EXPECT_EQ(s->state().current_phase, PhaseId::course_selection);
  ASSERT_EQ(s->state().selected_courses.size(), 2u);
  EXPECT_EQ(s->state().selected_courses[0].course_id, "C02");
  EXPECT_EQ(s->state().selected_courses[1].course_id, "C05");
}

TEST(Session, SignTakesPrecedenceAtTheCap) {
  auto backend = std::make_unique<PromptAwareBackend>("はい。");
  auto* raw = backend.get();
  auto s = make_session(std::move(backend));
  s->start();
  s->advance("a");
  s->advance("b");
  raw->set_sign_every_turn(true);
  EXPECT_EQ(s->advance("c").decision, TransitionDecision::advance_by_sign);
}

TEST(Session, SignOnlyOutputIsReplacedByCannedLine) {
  auto backend = std::make_unique<PromptAwareBackend>("");
  backend->set_sign_every_turn(true);
  auto s = make_session(std::move(backend));
  s->start();
  const auto r = s->advance("こんにちは");
  EXPECT_EQ(r.decision, TransitionDecision::advance_by_sign);
  EXPECT_EQ(r.system_text, s->resources().phases.at(PhaseId::introduction).sign_only_utterance);
  EXPECT_FALSE(r.system_text.empty());
  EXPECT_FALSE(r.segments.empty());
  std::string joined;
  for (const auto& seg : r.segments) joined += seg.text;
  EXPECT_EQ(joined, r.system_text);
  EXPECT_EQ(s->state().history.back().text, r.system_text);
}

TEST(Session, SignEveryTurnClosesWithAPlanInFiveExchanges) {
  auto backend = std::make_unique<PromptAwareBackend>("かしこまりました。");
  backend->set_sign_every_turn(true);
  auto s = make_session(std::move(backend));
  s->start();
  std::vector<TransitionDecision> decisions;
  for (int i = 0; i < 5; ++i) {
    const auto r = s->advance("はい");
    decisions.push_back(r.decision);
    EXPECT_FALSE(any_sign(r));
  }
  EXPECT_EQ(decisions.back(), TransitionDecision::close);
  EXPECT_EQ(s->state().status, SessionStatus::closed);
  ASSERT_TRUE(s->state().final_plan);
  const auto& plan = *s->state().final_plan;
  EXPECT_EQ(plan.spots[0].name, "清水寺");
  EXPECT_EQ(plan.spots[1].name, "金閣寺");
  EXPECT_NO_THROW(validate(plan.route));
  for (std::size_t i = 1; i < plan.schedule.entries.size(); ++i) {
    EXPECT_LT(plan.schedule.entries[i - 1].time, plan.schedule.entries[i].time);
  }
  EXPECT_EQ(plan.course_ids, (std::vector<std::string>{"C02", "C05"}));
  EXPECT_NE(describe_plan(plan).find("清水寺（きよみずでら）"), std::string::npos);
  try {
    s->advance("まだ話したい");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::session_not_active);
  }
}

TEST(Session, NeverSignTerminatesAfterSumOfCaps) {
  auto s = make_session(std::make_unique<PromptAwareBackend>());
  s->start();
  const int budget = s->resources().phases.total_max_turns();
  EXPECT_EQ(budget, 3 + 5 + 10 + 6 + 2);
  int turns = 0;
  int last_phase = 1;
  while (s->state().status == SessionStatus::active) {
    ASSERT_LT(turns, budget);
    s->advance("そうですね");
    ++turns;
    const int now = ordinal(s->state().current_phase);
    EXPECT_TRUE(now == last_phase || now == last_phase + 1);
    last_phase = now;
    const auto& st = s->state();
    EXPECT_LE(st.turns_in_phase, s->resources().phases.at(st.current_phase).max_turns);
    if (ordinal(st.current_phase) < 3) EXPECT_TRUE(st.selected_courses.empty());
    else EXPECT_EQ(st.selected_courses.size(), 2u);
    if (ordinal(st.current_phase) >= 4) EXPECT_EQ(st.decided_spots.size(), 2u);
    EXPECT_EQ(st.final_plan.has_value(), st.status == SessionStatus::closed);
  }
  EXPECT_EQ(turns, budget);
  EXPECT_EQ(s->state().status, SessionStatus::closed);
  const auto& h = s->state().history;
  for (std::size_t i = 0; i < h.size(); ++i) EXPECT_EQ(h[i].index, static_cast<int>(i));
}

TEST(Session, BackendFailureLeavesStateUntouched) {
  auto flaky = std::make_unique<Flaky>(std::make_unique<PromptAwareBackend>());
  auto* raw = flaky.get();
  auto s = make_session(std::move(flaky));
  s->start();
  s->advance("こんにちは");
  const auto before = s->state().history;
  raw->fail_next = true;
  try {
    s->advance("聞こえますか");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::backend_unavailable);
  }
  EXPECT_EQ(s->state().history, before);
  EXPECT_EQ(s->state().turns_in_phase, 1);
  EXPECT_EQ(s->state().status, SessionStatus::active);
  const auto r = s->advance("聞こえますか");
  EXPECT_EQ(s->state().turns_in_phase, 2);
  // the failed call is kept on the tape of the next completed turn
  ASSERT_EQ(r.tape.size(), 2u);
  EXPECT_EQ(r.tape[0].failure, ErrorCode::backend_unavailable);
  EXPECT_FALSE(r.tape[1].failure);
}

TEST(Session, ExtractionFailureFailsTheSession) {
  auto backend = std::make_unique<PromptAwareBackend>("はい。", "IDS: C02, C05", "SPOTS: 清水寺");
  backend->set_sign_every_turn(true);
  auto s = make_session(std::move(backend));
  s->start();
  s->advance("a");
  s->advance("b");
  const auto r = s->advance("c");  // leaves phase 3
  EXPECT_EQ(r.status, SessionStatus::failed);
  ASSERT_TRUE(r.failure);
  EXPECT_NE(r.failure->find("extraction-failure"), std::string::npos);
  EXPECT_EQ(s->state().status, SessionStatus::failed);
  EXPECT_THROW(s->advance("d"), Error);
}

TEST(Session, EmptyUtteranceIsRejected) {
  auto s = make_session(std::make_unique<PromptAwareBackend>());
  s->start();
  try {
    s->advance("   ");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::utterance_rejected);
  }
  EXPECT_EQ(s->state().history.size(), 1u);
}

TEST(Session, ScheduleDisplayPinsDecidedSpots) {
  auto backend = std::make_unique<PromptAwareBackend>("清水寺と銀閣寺と二条城と龍安寺、それに平等院もあります。");
  backend->set_sign_every_turn(true);
  auto s = make_session(std::move(backend));
  s->start();
  s->advance("a");
  const auto r2 = s->advance("b");
  EXPECT_EQ(r2.display.slots.size(), 0u);  // reset on entering phase 3
  const auto r3 = s->advance("c");
  ASSERT_EQ(s->state().current_phase, PhaseId::schedule_proposal);
  ASSERT_EQ(r3.display.slots.size(), 2u);
  EXPECT_EQ(r3.display.slots[0].spot.name, "清水寺");
  EXPECT_EQ(r3.display.slots[1].spot.name, "金閣寺");
  EXPECT_TRUE(r3.display.maps_enabled);
}

TEST(Session, CustomResourcesWithMissingTemplateAreRejected) {
  Resources broken = *support::fixture_resources();
  broken.phases.at(PhaseId::inquiry).prompt_template_id = "nope";
  EXPECT_THROW(broken.validate(), Error);
}
