#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tabi/courses.hpp"
#include "tabi/dialogue.hpp"
#include "tabi/display.hpp"
#include "tabi/knowledge.hpp"
#include "tabi/llm.hpp"
#include "tabi/phase.hpp"
#include "tabi/prompt.hpp"
#include "tabi/segmenter.hpp"

namespace tabi {

/// Read-only data shared by every session.
struct Resources {
  PhaseTable phases = PhaseTable::defaults();
  PromptLibrary prompts;
  CourseCatalog catalog;
  std::shared_ptr<const KnowledgeHub> knowledge;
  DisplayIndex display_index;
  PunctuationSet punctuation;
  ClockTime day_start{10 * 60};
  ClockTime day_cutoff = kDefaultDayCutoff;
  std::string greeting_fallback = "いらっしゃいませ。本日はご来店ありがとうございます。";

  /// Every phase template and backend template resolves; catalog spots
  /// resolve in the knowledge hub. Throws `config-error`.
  void validate() const;
};

struct TravelPlan {
  std::array<SpotInfo, 2> spots;
  RoutePlan route;
  Schedule schedule;
  std::vector<std::string> course_ids;
};

enum class SessionStatus { active, closed, failed };

std::string_view to_string(SessionStatus status);

struct SessionState {
  std::string session_id;
  PhaseId current_phase = PhaseId::introduction;
  int turns_in_phase = 0;
  std::vector<DialogueTurn> history;
  std::vector<ModelCourse> selected_courses;  // 0 before phase 3, then 2
  std::vector<SpotInfo> decided_spots;        // 0 before phase 4, then 2
  std::optional<RoutePlan> route;
  std::optional<Schedule> schedule;
  std::optional<TravelPlan> final_plan;       // only once closed
  SessionStatus status = SessionStatus::active;
};

struct PhaseChange {
  PhaseId from;
  PhaseId to;
  TransitionDecision reason;
};

struct TurnResult {
  std::string system_text;  // as spoken, sign removed
  std::vector<SpeechSegment> segments;
  DisplayState display;
  std::vector<ActionCue> cues;
  TransitionDecision decision = TransitionDecision::stay;
  std::optional<PhaseChange> phase_change;
  SessionStatus status = SessionStatus::active;
  std::optional<std::string> failure;
  std::vector<ScriptEntry> tape;  // every backend call made during the turn
};

/// One customer's dialogue. Not thread-safe: callers serialize access.
class Session {
 public:
  Session(std::string session_id, std::shared_ptr<const Resources> resources,
          std::unique_ptr<Backend> backend, BackendHandle handle = {});

  /// Generates and streams the greeting. The greeting is a system-only turn
  /// and does not count toward the phase's turn cap.
  TurnResult start(const SegmentSink& on_segment = {});

  /// One exchange: customer utterance in, streamed system reply out, then
  /// transition, hooks and display update. Backend failures leave the
  /// session untouched and rethrow; hook failures mark it failed.
  TurnResult advance(std::string_view customer_utterance, const SegmentSink& on_segment = {});

  const SessionState& state() const { return state_; }
  const DisplayState& display() const { return display_; }
  bool started() const { return started_; }
  const Resources& resources() const { return *resources_; }

 private:
  PromptContext context() const;
  void run_entry_hooks(PhaseId phase);
  std::string speak(const RenderedPrompt& prompt, TurnResult& result, const SegmentSink& on_segment);
  void speak_canned(std::string_view text, TurnResult& result, const SegmentSink& on_segment);

  std::shared_ptr<const Resources> resources_;
  RecordingBackend* recorder_;  // owned by gateway_
  LlmGateway gateway_;
  SessionState state_;
  DisplayState display_;
  bool started_ = false;
};

/// Human-readable plan summary used by the closing prompt and the CLI.
std::string describe_plan(const TravelPlan& plan);

}  // namespace tabi
