#include "tabi/display.hpp"

#include <algorithm>

namespace tabi {

std::string_view to_string(DisplayMode mode) {
  return mode == DisplayMode::spot_slots ? "spot-slots" : "course-list";
}

void NameIndex::add(std::string pattern, std::size_t key) {
  if (pattern.empty()) return;
  patterns_.emplace_back(std::move(pattern), key);
  std::stable_sort(patterns_.begin(), patterns_.end(),
                   [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });
}

std::vector<std::size_t> NameIndex::find(std::string_view text) const {
  std::vector<std::size_t> keys;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t advance = 1;
    for (const auto& [pattern, key] : patterns_) {
      if (text.compare(pos, pattern.size(), pattern) == 0) {
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
        advance = pattern.size();
        break;
      }
    }
    if (advance == 1) {
      // Step over a whole UTF-8 sequence so matches stay codepoint-aligned.
      const auto lead = static_cast<unsigned char>(text[pos]);
      if (lead >= 0xF0) advance = 4;
      else if (lead >= 0xE0) advance = 3;
      else if (lead >= 0xC0) advance = 2;
    }
    pos += advance;
  }
  return keys;
}

DisplayIndex::DisplayIndex(std::vector<SpotInfo> spots, std::vector<ModelCourse> courses)
    : spots_(std::move(spots)), courses_(std::move(courses)) {
  for (std::size_t i = 0; i < spots_.size(); ++i) {
    spot_index_.add(spots_[i].name, i);
    for (const auto& alias : spots_[i].aliases) spot_index_.add(alias, i);
  }
  for (std::size_t i = 0; i < courses_.size(); ++i) course_index_.add(courses_[i].title, i);
}

std::vector<const SpotInfo*> DisplayIndex::spots_in(std::string_view utterance) const {
  std::vector<const SpotInfo*> out;
  for (auto key : spot_index_.find(utterance)) out.push_back(&spots_[key]);
  return out;
}

std::vector<const ModelCourse*> DisplayIndex::courses_in(std::string_view utterance) const {
  std::vector<const ModelCourse*> out;
  for (auto key : course_index_.find(utterance)) out.push_back(&courses_[key]);
  return out;
}

DisplayState update(const DisplayState& state, std::string_view system_utterance,
                    const DisplayIndex& index, int turn_index) {
  DisplayState next = state;
  next.turn_index = turn_index;
  if (state.pinned) return next;

  const auto courses = index.courses_in(system_utterance);
  if (!courses.empty()) {
    next.mode = DisplayMode::course_list;
    next.course = *courses.front();
    return next;
  }

  const auto spots = index.spots_in(system_utterance);
  if (spots.empty()) return next;
  next.mode = DisplayMode::spot_slots;
  next.course.reset();
  for (const auto* spot : spots) {
    const bool shown = std::any_of(next.slots.begin(), next.slots.end(),
                                   [&](const SpotCard& card) { return card.spot.name == spot->name; });
    if (shown) continue;
    if (next.slots.size() < kMaxSlots) {
      next.slots.push_back({*spot, turn_index});
    } else {
      next.slots[kMaxSlots - 1] = {*spot, turn_index};
    }
  }
  return next;
}

DisplayState reset_for_phase(const DisplayState& state, PhaseId phase,
                             std::span<const SpotInfo> decided_spots) {
  if (phase == PhaseId::closing && state.pinned) return state;
  DisplayState next;
  next.turn_index = state.turn_index;
  if (phase == PhaseId::schedule_proposal || phase == PhaseId::closing) {
    for (const auto& spot : decided_spots) next.slots.push_back({spot, state.turn_index});
    next.maps_enabled = true;
    next.pinned = true;
  }
  return next;
}

std::vector<ActionCue> action_cues(TransitionDecision decision, PhaseId from, const PhaseTable& table) {
  std::vector<ActionCue> cues;
  if (decision == TransitionDecision::stay) return cues;
  for (const auto& cue : table.at(from).actions) {
    if (cue.timing == CueTiming::phase_exit && cue.kind != CueKind::none) cues.push_back(cue);
  }
  if (decision == TransitionDecision::close) return cues;
  if (const auto next = next_phase(from)) {
    auto entering = entry_cues(*next, table);
    cues.insert(cues.end(), entering.begin(), entering.end());
  }
  return cues;
}

std::vector<ActionCue> entry_cues(PhaseId phase, const PhaseTable& table) {
  std::vector<ActionCue> cues;
  for (const auto& cue : table.at(phase).actions) {
    if (cue.timing == CueTiming::phase_entry && cue.kind != CueKind::none) cues.push_back(cue);
  }
  return cues;
}

}  // namespace tabi
