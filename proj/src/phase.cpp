#include "tabi/phase.hpp"

#include <numeric>

#include "tabi/dialogue.hpp"
#include "tabi/error.hpp"
#include "tabi/text.hpp"

namespace tabi {

PhaseId phase_from_ordinal(int value) {
  if (value < 1 || value > kPhaseCount) {
    throw Error(ErrorCode::invalid_argument, "phase ordinal out of range: " + std::to_string(value));
  }
  return static_cast<PhaseId>(value);
}

std::optional<PhaseId> next_phase(PhaseId phase) {
  if (phase == PhaseId::closing) return std::nullopt;
  return static_cast<PhaseId>(ordinal(phase) + 1);
}

std::string_view phase_name(PhaseId phase) {
  switch (phase) {
    case PhaseId::introduction: return "Introduction&IceBreaker";
    case PhaseId::inquiry: return "Inquiry";
    case PhaseId::course_selection: return "Course&SpotSelection";
    case PhaseId::schedule_proposal: return "ScheduleProposal";
    case PhaseId::closing: return "Confirmation&Closing";
  }
  return "?";
}

std::string_view to_string(CueKind kind) { return kind == CueKind::bow ? "bow" : "none"; }

std::string_view to_string(CueTiming timing) {
  return timing == CueTiming::phase_entry ? "phase_entry" : "phase_exit";
}

std::string_view to_string(Hook hook) {
  switch (hook) {
    case Hook::run_course_selection: return "run-course-selection";
    case Hook::extract_spots: return "extract-spots";
    case Hook::fetch_route: return "fetch-route";
    case Hook::build_schedule: return "build-schedule";
  }
  return "?";
}

std::string_view to_string(TransitionDecision decision) {
  switch (decision) {
    case TransitionDecision::stay: return "stay";
    case TransitionDecision::advance_by_sign: return "advance_by_sign";
    case TransitionDecision::advance_by_cap: return "advance_by_cap";
    case TransitionDecision::close: return "close";
  }
  return "?";
}

std::string_view to_string(Speaker speaker) {
  return speaker == Speaker::system ? "system" : "customer";
}

Speaker speaker_from_string(std::string_view name) {
  if (name == "system") return Speaker::system;
  if (name == "customer") return Speaker::customer;
  throw Error(ErrorCode::parse_failure, "unknown speaker: " + std::string(name));
}

PhaseTable PhaseTable::defaults() {
  PhaseTable table;
  const ActionCue bow_entry{CueKind::bow, CueTiming::phase_entry};
  const ActionCue bow_exit{CueKind::bow, CueTiming::phase_exit};

  table.at(PhaseId::introduction) = {PhaseId::introduction, 3, true, "icebreak", {bow_entry}, {},
                                     "それでは、ご旅行のご希望を少しお伺いしますね。"};
  table.at(PhaseId::inquiry) = {PhaseId::inquiry, 5, true, "inquiry", {}, {},
                                "ありがとうございます。お客様にぴったりのコースをご用意しますね。"};
  table.at(PhaseId::course_selection) = {PhaseId::course_selection, 10, true, "main", {},
                                         {Hook::run_course_selection},
                                         "では、その二か所で計画を立ててみましょう。"};
  table.at(PhaseId::schedule_proposal) = {PhaseId::schedule_proposal, 6, true, "schedule", {},
                                          {Hook::extract_spots, Hook::fetch_route, Hook::build_schedule},
                                          "では、この日程で最終確認をいたしますね。"};
  table.at(PhaseId::closing) = {PhaseId::closing, 2, true, "closing", {bow_exit}, {},
                                "本日はありがとうございました。素敵な京都旅行をお楽しみください。"};
  return table;
}

void PhaseTable::set_max_turns(PhaseId phase, int max_turns) {
  if (max_turns < 1) {
    throw Error(ErrorCode::invalid_argument, "max_turns must be >= 1");
  }
  at(phase).max_turns = max_turns;
}

int PhaseTable::total_max_turns() const {
  return std::accumulate(configs_.begin(), configs_.end(), 0,
                         [](int sum, const PhaseConfig& c) { return sum + c.max_turns; });
}

bool contains_end_sign(std::string_view text) { return text.find(kEndSign) != std::string_view::npos; }

TransitionDecision check_transition(std::string_view llm_output, int turns_in_phase,
                                    const PhaseConfig& config) {
  auto decision = TransitionDecision::stay;
  if (config.end_sign_enabled && contains_end_sign(llm_output)) {
    decision = TransitionDecision::advance_by_sign;
  } else if (turns_in_phase >= config.max_turns) {
    decision = TransitionDecision::advance_by_cap;
  }
  if (decision != TransitionDecision::stay && config.phase == PhaseId::closing) {
    return TransitionDecision::close;
  }
  return decision;
}

namespace {

std::string strip_once(std::string_view input) {
  std::string out;
  std::size_t pos = 0;
  bool pending_join = false;
  auto append_piece = [&](std::string_view piece) {
    if (pending_join) {
      const bool left_space = text::trim_right(out).size() != out.size();
      const bool right_space = text::trim_left(piece).size() != piece.size();
      if (left_space || right_space) {
        out.resize(text::trim_right(out).size());
        piece = text::trim_left(piece);
        if (!out.empty() && !piece.empty()) out.push_back(' ');
      }
    }
    out.append(piece);
  };
  while (true) {
    const auto hit = input.find(kEndSign, pos);
    if (hit == std::string_view::npos) break;
    append_piece(input.substr(pos, hit - pos));
    pending_join = true;
    pos = hit + kEndSign.size();
  }
  append_piece(input.substr(pos));
  return std::string(text::trim(out));
}

}  // namespace

std::string strip_end_sign(std::string_view input) {
  // Removing one sign can join the halves of another ("[EN[END]D]").
  auto out = strip_once(input);
  while (contains_end_sign(out)) out = strip_once(out);
  return out;
}

}  // namespace tabi
