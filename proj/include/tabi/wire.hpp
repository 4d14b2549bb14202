#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "tabi/display.hpp"
#include "tabi/session.hpp"

namespace tabi {

enum class MessageKind {
  customer_utterance,
  speech_segment,
  display_state,
  action_cue,
  phase_changed,
  session_closed,
  error,
  snapshot,
};

std::string_view to_string(MessageKind kind);
MessageKind message_kind_from_string(std::string_view name);

/// One structured message on a session stream. `seq` strictly increases per
/// session.
struct WireMessage {
  MessageKind kind = MessageKind::error;
  std::string session_id;
  std::uint64_t seq = 0;
  nlohmann::json payload = nlohmann::json::object();
};

nlohmann::json to_json(const WireMessage& message);
WireMessage wire_message_from_json(const nlohmann::json& j);

nlohmann::json to_json(const DisplayState& display);
nlohmann::json to_json(const RoutePlan& plan);
nlohmann::json to_json(const Schedule& schedule);
nlohmann::json to_json(const TravelPlan& plan);
nlohmann::json to_json(const DialogueTurn& turn);

/// Payload builders for each kind. `turn` is the index of the system turn
/// the message belongs to.
nlohmann::json segment_payload(const SpeechSegment& segment, int turn);
nlohmann::json cue_payload(const ActionCue& cue);
nlohmann::json phase_changed_payload(const PhaseChange& change);
nlohmann::json error_payload(std::string_view code, std::string_view message);

}  // namespace tabi
