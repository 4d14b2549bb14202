#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tabi {

/// The five scenario stages. Ordinals are the wire representation.
enum class PhaseId : int {
  introduction = 1,
  inquiry = 2,
  course_selection = 3,
  schedule_proposal = 4,
  closing = 5,
};

inline constexpr int kPhaseCount = 5;

constexpr int ordinal(PhaseId phase) { return static_cast<int>(phase); }
PhaseId phase_from_ordinal(int ordinal);
std::optional<PhaseId> next_phase(PhaseId phase);
std::string_view phase_name(PhaseId phase);

enum class CueKind { none, bow };
enum class CueTiming { phase_entry, phase_exit };

struct ActionCue {
  CueKind kind = CueKind::none;
  CueTiming timing = CueTiming::phase_entry;

  friend bool operator==(const ActionCue&, const ActionCue&) = default;
};

std::string_view to_string(CueKind kind);
std::string_view to_string(CueTiming timing);

enum class Hook { run_course_selection, extract_spots, fetch_route, build_schedule };

std::string_view to_string(Hook hook);

struct PhaseConfig {
  PhaseId phase = PhaseId::introduction;
  int max_turns = 1;
  bool end_sign_enabled = true;
  std::string prompt_template_id;
  std::vector<ActionCue> actions;  // both entry and exit cues, tagged by timing
  std::vector<Hook> entry_hooks;
  // Spoken instead when the model returns nothing but the end sign.
  std::string sign_only_utterance;
};

/// Per-phase configuration for a whole scenario.
class PhaseTable {
 public:
  /// Default scenario: caps 3/5/10/6/2, bow on phase-1 entry and phase-5 exit.
  static PhaseTable defaults();

  const PhaseConfig& at(PhaseId phase) const { return configs_[ordinal(phase) - 1]; }
  PhaseConfig& at(PhaseId phase) { return configs_[ordinal(phase) - 1]; }

  void set_max_turns(PhaseId phase, int max_turns);
  int total_max_turns() const;

  const std::array<PhaseConfig, kPhaseCount>& all() const { return configs_; }

 private:
  std::array<PhaseConfig, kPhaseCount> configs_;
};

enum class TransitionDecision { stay, advance_by_sign, advance_by_cap, close };

std::string_view to_string(TransitionDecision decision);

inline constexpr std::string_view kEndSign = "[END]";

bool contains_end_sign(std::string_view text);

/// `turns_in_phase` counts the turn that just completed. The sign wins over
/// the cap when both hold; in the closing phase an advance becomes `close`.
TransitionDecision check_transition(std::string_view llm_output, int turns_in_phase,
                                    const PhaseConfig& config);

/// Removes every occurrence of the end sign. Whitespace touching a removal
/// site collapses to one space (or nothing at either end), and the result is
/// trimmed.
std::string strip_end_sign(std::string_view text);

}  // namespace tabi
