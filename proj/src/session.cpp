#include "tabi/session.hpp"

#include "tabi/error.hpp"
#include "tabi/text.hpp"

namespace tabi {
namespace {

std::string spot_facts(const SpotInfo& spot) {
  std::string line = spot.name + "（" + spot.furigana + "）: 営業時間 " + spot.open_hours + "、料金 " +
                     spot.fee_text() + "、滞在目安 " + std::to_string(spot.stay_minutes) + "分。";
  if (!spot.blurb.empty()) line += spot.blurb;
  return line;
}

}  // namespace

std::string_view to_string(SessionStatus status) {
  switch (status) {
    case SessionStatus::active: return "active";
    case SessionStatus::closed: return "closed";
    case SessionStatus::failed: return "failed";
  }
  return "?";
}

void Resources::validate() const {
  if (!knowledge) throw Error(ErrorCode::config_error, "resources without a knowledge hub");
  for (const auto& config : phases.all()) {
    if (!prompts.contains(config.prompt_template_id)) {
      throw Error(ErrorCode::config_error, "phase " + std::string(phase_name(config.phase)) +
                                               " uses missing template " + config.prompt_template_id);
    }
    if (config.max_turns < 1) throw Error(ErrorCode::config_error, "max_turns must be >= 1");
  }
  for (auto id : {kCourseSelectionTemplate, kSpotExtractionTemplate, kSpotExtractionStrictTemplate}) {
    if (!prompts.contains(id)) {
      throw Error(ErrorCode::config_error, "missing backend template " + std::string(id));
    }
  }
  if (catalog.size() < 2) throw Error(ErrorCode::config_error, "catalog needs at least two courses");
  try {
    catalog.validate_spots(*knowledge);
  } catch (const Error& e) {
    throw Error(ErrorCode::config_error, std::string("catalog: ") + e.what());
  }
}

std::string describe_plan(const TravelPlan& plan) {
  std::vector<std::string> lines;
  lines.push_back("訪問先: " + plan.spots[0].name + "（" + plan.spots[0].furigana + "）、" + plan.spots[1].name +
                  "（" + plan.spots[1].furigana + "）");
  lines.push_back(plan.route.narrative);
  lines.push_back(render_schedule(plan.schedule));
  return text::join(lines, "\n");
}

Session::Session(std::string session_id, std::shared_ptr<const Resources> resources,
                 std::unique_ptr<Backend> backend, BackendHandle handle)
    : resources_(std::move(resources)),
      recorder_(new RecordingBackend(std::move(backend))),
      gateway_(std::unique_ptr<Backend>(recorder_), std::move(handle)) {
  if (!resources_) throw Error(ErrorCode::invalid_argument, "session needs resources");
  state_.session_id = std::move(session_id);
}

PromptContext Session::context() const {
  PromptContext ctx;
  if (state_.selected_courses.size() == 2) {
    ctx["course_a"] = course_summary_line(state_.selected_courses[0], "A");
    ctx["course_b"] = course_summary_line(state_.selected_courses[1], "B");
  }
  if (state_.decided_spots.size() == 2) {
    ctx["spot_facts"] = spot_facts(state_.decided_spots[0]) + "\n" + spot_facts(state_.decided_spots[1]);
  }
  if (state_.route) ctx["route"] = state_.route->narrative;
  if (state_.schedule) ctx["schedule"] = render_schedule(*state_.schedule);
  if (state_.route && state_.schedule && state_.decided_spots.size() == 2) {
    ctx["plan"] = describe_plan({{state_.decided_spots[0], state_.decided_spots[1]}, *state_.route,
                                 *state_.schedule, {}});
  }
  return ctx;
}

std::string Session::speak(const RenderedPrompt& prompt, TurnResult& result, const SegmentSink& on_segment) {
  return gateway_.stream_speech(prompt, resources_->punctuation, [&](const SpeechSegment& segment) {
    result.segments.push_back(segment);
    if (on_segment) on_segment(segment);
  });
}

void Session::speak_canned(std::string_view canned, TurnResult& result, const SegmentSink& on_segment) {
  const int offset = static_cast<int>(result.segments.size());
  SpeechSegmenter segmenter(resources_->punctuation, [&](const SpeechSegment& s) {
    SpeechSegment shifted = s;
    shifted.index += offset;
    result.segments.push_back(shifted);
    if (on_segment) on_segment(shifted);
  });
  segmenter.feed(canned);
  segmenter.finish();
}

TurnResult Session::start(const SegmentSink& on_segment) {
  if (started_) throw Error(ErrorCode::invalid_argument, "session already started");
  const auto& res = *resources_;
  const auto& config = res.phases.at(PhaseId::introduction);

  TurnResult result;
  const auto prompt = res.prompts.render(config.prompt_template_id, context(), {});
  std::string raw;
  try {
    raw = speak(prompt, result, on_segment);
  } catch (...) {
    recorder_->take_tape();
    throw;
  }
  result.system_text = strip_end_sign(raw);
  if (result.system_text.empty()) {
    result.system_text = res.greeting_fallback;
    speak_canned(result.system_text, result, on_segment);
  }

  state_.history.push_back({Speaker::system, result.system_text, PhaseId::introduction, 0});
  display_ = update(reset_for_phase(display_, PhaseId::introduction, {}), result.system_text,
                    res.display_index, 0);
  started_ = true;

  result.display = display_;
  result.cues = entry_cues(PhaseId::introduction, res.phases);
  result.status = state_.status;
  result.tape = recorder_->take_tape();
  return result;
}

TurnResult Session::advance(std::string_view customer_utterance, const SegmentSink& on_segment) {
  if (!started_ || state_.status != SessionStatus::active) {
    throw Error(ErrorCode::session_not_active, "session " + state_.session_id + " is not active");
  }
  const auto utterance = text::trim(customer_utterance);
  if (utterance.empty()) throw Error(ErrorCode::utterance_rejected, "empty utterance");

  const auto& res = *resources_;
  const auto phase = state_.current_phase;
  const auto& config = res.phases.at(phase);

  const DialogueTurn customer_turn{Speaker::customer, std::string(utterance), phase,
                                   static_cast<int>(state_.history.size())};
  auto prompt_history = state_.history;
  prompt_history.push_back(customer_turn);

  TurnResult result;
  const auto prompt = res.prompts.render(config.prompt_template_id, context(), prompt_history);
  // On failure the failed calls stay on the tape and are logged with the next turn.
  const auto raw = speak(prompt, result, on_segment);

  result.system_text = strip_end_sign(raw);
  if (result.system_text.empty()) {
    result.system_text = config.sign_only_utterance;
    speak_canned(result.system_text, result, on_segment);
  }

  state_.history = std::move(prompt_history);
  const int system_index = static_cast<int>(state_.history.size());
  state_.history.push_back({Speaker::system, result.system_text, phase, system_index});
  ++state_.turns_in_phase;

  display_ = update(display_, result.system_text, res.display_index, system_index);

  result.decision = check_transition(raw, state_.turns_in_phase, config);
  result.cues = action_cues(result.decision, phase, res.phases);

  if (result.decision == TransitionDecision::advance_by_sign ||
      result.decision == TransitionDecision::advance_by_cap) {
    const auto next = *next_phase(phase);
    result.phase_change = PhaseChange{phase, next, result.decision};
    state_.current_phase = next;
    state_.turns_in_phase = 0;
    try {
      run_entry_hooks(next);
    } catch (const Error& e) {
      state_.status = SessionStatus::failed;
      result.failure = std::string(to_string(e.code())) + ": " + e.what();
    }
    display_ = reset_for_phase(display_, next, state_.decided_spots);
  } else if (result.decision == TransitionDecision::close) {
    if (state_.decided_spots.size() == 2 && state_.route && state_.schedule) {
      std::vector<std::string> course_ids;
      for (const auto& c : state_.selected_courses) course_ids.push_back(c.course_id);
      state_.final_plan = TravelPlan{{state_.decided_spots[0], state_.decided_spots[1]},
                                     *state_.route,
                                     *state_.schedule,
                                     std::move(course_ids)};
      state_.status = SessionStatus::closed;
    } else {
      state_.status = SessionStatus::failed;
      result.failure = "closing without a complete plan";
    }
  }

  result.display = display_;
  result.status = state_.status;
  result.tape = recorder_->take_tape();
  return result;
}

void Session::run_entry_hooks(PhaseId phase) {
  const auto& res = *resources_;
  for (auto hook : res.phases.at(phase).entry_hooks) {
    switch (hook) {
      case Hook::run_course_selection: {
        auto selection = select_top2(state_.history, res.catalog, &gateway_, res.prompts);
        state_.selected_courses.assign(selection.courses.begin(), selection.courses.end());
        break;
      }
      case Hook::extract_spots: {
        auto decision = extract_spots(state_.history, gateway_, res.prompts, *res.knowledge);
        state_.decided_spots.assign(decision.spots.begin(), decision.spots.end());
        break;
      }
      case Hook::fetch_route: {
        if (state_.decided_spots.size() != 2) {
          throw Error(ErrorCode::invalid_argument, "route needs two decided spots");
        }
        const auto& a = state_.decided_spots[0];
        const auto& b = state_.decided_spots[1];
        try {
          state_.route = res.knowledge->find_route(a, b);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::no_route) throw;
          state_.route = approximate_walk(a, b, res.knowledge->templates());
        }
        break;
      }
      case Hook::build_schedule: {
        if (state_.decided_spots.size() != 2 || !state_.route) {
          throw Error(ErrorCode::invalid_argument, "schedule needs spots and a route");
        }
        state_.schedule = build_schedule(state_.decided_spots[0], state_.decided_spots[1], *state_.route,
                                         res.day_start, res.day_cutoff);
        break;
      }
    }
  }
}

}  // namespace tabi
