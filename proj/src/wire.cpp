#include "tabi/wire.hpp"

#include "tabi/error.hpp"

namespace tabi {

std::string_view to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::customer_utterance: return "customer_utterance";
    case MessageKind::speech_segment: return "speech_segment";
    case MessageKind::display_state: return "display_state";
    case MessageKind::action_cue: return "action_cue";
    case MessageKind::phase_changed: return "phase_changed";
    case MessageKind::session_closed: return "session_closed";
    case MessageKind::error: return "error";
    case MessageKind::snapshot: return "snapshot";
  }
  return "?";
}

MessageKind message_kind_from_string(std::string_view name) {
  for (auto kind : {MessageKind::customer_utterance, MessageKind::speech_segment, MessageKind::display_state,
                    MessageKind::action_cue, MessageKind::phase_changed, MessageKind::session_closed,
                    MessageKind::error, MessageKind::snapshot}) {
    if (to_string(kind) == name) return kind;
  }
  throw Error(ErrorCode::parse_failure, "unknown message kind: " + std::string(name));
}

nlohmann::json to_json(const WireMessage& m) {
  return {{"kind", to_string(m.kind)}, {"session_id", m.session_id}, {"seq", m.seq}, {"payload", m.payload}};
}

WireMessage wire_message_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::parse_failure, "message is not an object");
  WireMessage m;
  try {
    m.kind = message_kind_from_string(j.at("kind").get<std::string>());
    m.session_id = j.value("session_id", "");
    m.seq = j.value("seq", std::uint64_t{0});
    m.payload = j.value("payload", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_failure, std::string("bad message: ") + e.what());
  }
  return m;
}

nlohmann::json to_json(const DisplayState& d) {
  nlohmann::json slots = nlohmann::json::array();
  for (const auto& card : d.slots) {
    slots.push_back({
        {"name", card.spot.name},
        {"furigana", card.spot.furigana},
        {"image", card.spot.image_ref},
        {"map", {{"lat", card.spot.map_point.latitude}, {"lon", card.spot.map_point.longitude}}},
        {"shown_since_turn", card.shown_since_turn},
    });
  }
  nlohmann::json j{
      {"mode", to_string(d.mode)},
      {"slots", slots},
      {"maps", d.maps_enabled},
      {"pinned", d.pinned},
      {"turn_index", d.turn_index},
  };
  if (d.course) {
    j["course"] = {{"id", d.course->course_id}, {"title", d.course->title}, {"images", d.course->hero_images}};
  } else {
    j["course"] = nullptr;
  }
  return j;
}

nlohmann::json to_json(const RoutePlan& plan) {
  nlohmann::json legs = nlohmann::json::array();
  for (const auto& leg : plan.legs) {
    legs.push_back({{"from", leg.from},
                    {"to", leg.to},
                    {"mode", to_string(leg.mode)},
                    {"minutes", leg.minutes},
                    {"line", leg.line_name ? nlohmann::json(*leg.line_name) : nlohmann::json(nullptr)},
                    {"fare", leg.fare_yen ? nlohmann::json(*leg.fare_yen) : nlohmann::json(nullptr)}});
  }
  return {{"legs", legs},
          {"total_minutes", plan.total_minutes},
          {"narrative", plan.narrative},
          {"approximate", plan.approximate}};
}

nlohmann::json to_json(const Schedule& schedule) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : schedule.entries) {
    const char* activity = e.activity == Activity::visit ? "visit" : e.activity == Activity::transit ? "transit" : "end";
    entries.push_back({{"time", e.time.to_string()}, {"activity", activity}, {"label", e.label}});
  }
  return {{"entries", entries}};
}

nlohmann::json to_json(const TravelPlan& plan) {
  return {{"spots", {to_json(plan.spots[0]), to_json(plan.spots[1])}},
          {"route", to_json(plan.route)},
          {"schedule", to_json(plan.schedule)},
          {"courses", plan.course_ids}};
}

nlohmann::json to_json(const DialogueTurn& turn) {
  return {{"index", turn.index}, {"phase", ordinal(turn.phase)}, {"speaker", to_string(turn.speaker)}, {"text", turn.text}};
}

nlohmann::json segment_payload(const SpeechSegment& segment, int turn) {
  return {{"text", segment.text}, {"index", segment.index}, {"terminal", segment.terminal}, {"turn", turn}};
}

nlohmann::json cue_payload(const ActionCue& cue) {
  return {{"cue", to_string(cue.kind)}, {"timing", to_string(cue.timing)}};
}

nlohmann::json phase_changed_payload(const PhaseChange& change) {
  return {{"from", ordinal(change.from)},
          {"to", ordinal(change.to)},
          {"name", phase_name(change.to)},
          {"reason", to_string(change.reason)}};
}

nlohmann::json error_payload(std::string_view code, std::string_view message) {
  return {{"code", code}, {"message", message}};
}

}  // namespace tabi
