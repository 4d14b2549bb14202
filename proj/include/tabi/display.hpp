#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tabi/courses.hpp"
#include "tabi/knowledge.hpp"
#include "tabi/phase.hpp"

namespace tabi {

inline constexpr std::size_t kMaxSlots = 4;

/// Longest-match substring index. `find` reports each key once, in order of
/// first occurrence in the scanned text.
class NameIndex {
 public:
  void add(std::string pattern, std::size_t key);
  std::vector<std::size_t> find(std::string_view text) const;
  bool empty() const { return patterns_.empty(); }

 private:
  std::vector<std::pair<std::string, std::size_t>> patterns_;  // longest first
};

/// Spot names and aliases plus course titles known to the viewer.
class DisplayIndex {
 public:
  DisplayIndex() = default;
  DisplayIndex(std::vector<SpotInfo> spots, std::vector<ModelCourse> courses);

  std::vector<const SpotInfo*> spots_in(std::string_view utterance) const;
  std::vector<const ModelCourse*> courses_in(std::string_view utterance) const;

  const std::vector<SpotInfo>& spots() const { return spots_; }
  const std::vector<ModelCourse>& courses() const { return courses_; }

 private:
  std::vector<SpotInfo> spots_;
  std::vector<ModelCourse> courses_;
  NameIndex spot_index_;
  NameIndex course_index_;
};

struct SpotCard {
  SpotInfo spot;
  int shown_since_turn = 0;
};

enum class DisplayMode { spot_slots, course_list };

std::string_view to_string(DisplayMode mode);

struct DisplayState {
  DisplayMode mode = DisplayMode::spot_slots;
  std::vector<SpotCard> slots;
  std::optional<ModelCourse> course;
  bool maps_enabled = false;
  bool pinned = false;  // decided-spot view; mentions no longer change it
  int turn_index = 0;
};

/// Applies one full system utterance. A course title wins over spot names;
/// otherwise new spots fill free slots and, once four are shown, only the
/// fourth slot is replaced.
DisplayState update(const DisplayState& state, std::string_view system_utterance,
                    const DisplayIndex& index, int turn_index);

/// Fresh display for a phase. Phase 4 shows the decided spots with maps and
/// phase 5 keeps them; other phases start empty.
DisplayState reset_for_phase(const DisplayState& state, PhaseId phase,
                             std::span<const SpotInfo> decided_spots);

/// Cues for a transition out of `from`: exit cues of `from`, plus entry cues
/// of the next phase when advancing.
std::vector<ActionCue> action_cues(TransitionDecision decision, PhaseId from, const PhaseTable& table);

/// Cues fired when a session starts in `phase`.
std::vector<ActionCue> entry_cues(PhaseId phase, const PhaseTable& table);

}  // namespace tabi
