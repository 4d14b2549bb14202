#include <httplib.h>

#include <nlohmann/json.hpp>

#include "tabi/error.hpp"
#include "tabi/knowledge.hpp"

namespace tabi {
namespace {

TransitMode mode_from_move(std::string_view move) {
  if (move == "walk") return TransitMode::walk;
  if (move.find("bus") != std::string_view::npos) return TransitMode::bus;
  if (move.find("train") != std::string_view::npos || move == "subway") return TransitMode::train;
  if (move == "taxi" || move == "car") return TransitMode::taxi;
  throw Error(ErrorCode::parse_failure, "unknown move type: " + std::string(move));
}

std::string coord(const GeoPoint& p) {
  return std::to_string(p.latitude) + "," + std::to_string(p.longitude);
}

httplib::Result get(const std::string& endpoint, const std::string& path, const std::string& api_key,
                    int timeout_seconds) {
  httplib::Client client(endpoint);
  client.set_connection_timeout(timeout_seconds, 0);
  client.set_read_timeout(timeout_seconds, 0);
  httplib::Headers headers;
  if (!api_key.empty()) headers.emplace("X-Api-Key", api_key);
  return client.Get(path, headers);
}

}  // namespace

RemoteRouteProvider::RemoteRouteProvider(std::string endpoint, std::string api_key, int timeout_seconds)
    : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)), timeout_seconds_(timeout_seconds) {}

std::vector<RouteLeg> RemoteRouteProvider::map_response(const nlohmann::json& body, const SpotInfo& from,
                                                        const SpotInfo& to) {
  const auto items = body.find("items");
  if (items == body.end() || !items->is_array() || items->empty()) {
    throw Error(ErrorCode::no_route, "no route from " + from.name + " to " + to.name);
  }
  const auto& sections = (*items)[0].at("sections");
  std::vector<std::string> points;
  std::vector<const nlohmann::json*> moves;
  for (const auto& section : sections) {
    const auto type = section.value("type", "");
    if (type == "point") points.push_back(section.value("name", ""));
    if (type == "move") moves.push_back(&section);
  }
  if (moves.empty() || points.size() != moves.size() + 1) {
    throw Error(ErrorCode::malformed_response, "route sections do not alternate point/move");
  }
  points.front() = from.name;
  points.back() = to.name;
  std::vector<RouteLeg> legs;
  for (std::size_t i = 0; i < moves.size(); ++i) {
    const auto& move = *moves[i];
    RouteLeg leg;
    leg.from = points[i];
    leg.to = points[i + 1];
    leg.mode = mode_from_move(move.value("move", "walk"));
    leg.minutes = std::max(1, move.value("time", 1));
    if (move.contains("line_name") && move["line_name"].is_string()) {
      leg.line_name = move["line_name"].get<std::string>();
    }
    if (move.contains("fare") && move["fare"].is_number_integer()) leg.fare_yen = move["fare"].get<int>();
    legs.push_back(std::move(leg));
  }
  return legs;
}

std::vector<RouteLeg> RemoteRouteProvider::route(const SpotInfo& from, const SpotInfo& to) const {
  const auto path = "/route_transit?start=" + coord(from.map_point) + "&goal=" + coord(to.map_point);
  auto res = get(endpoint_, path, api_key_, timeout_seconds_);
  if (!res || res->status >= 500) {
    throw Error(ErrorCode::provider_unavailable, "route provider unreachable");
  }
  if (res->status == 404) throw Error(ErrorCode::no_route, "no route from " + from.name + " to " + to.name);
  const auto body = nlohmann::json::parse(res->body, nullptr, false);
  if (body.is_discarded()) throw Error(ErrorCode::provider_unavailable, "route provider sent garbage");
  try {
    return map_response(body, from, to);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::provider_unavailable, std::string("route provider: ") + e.what());
  }
}

RemoteSpotProvider::RemoteSpotProvider(std::string endpoint, std::string api_key,
                                       std::shared_ptr<const SpotProvider> fallback_index,
                                       int timeout_seconds)
    : endpoint_(std::move(endpoint)),
      api_key_(std::move(api_key)),
      index_(std::move(fallback_index)),
      timeout_seconds_(timeout_seconds) {
  if (!index_) throw Error(ErrorCode::invalid_argument, "remote spot provider needs an index");
}

SpotInfo RemoteSpotProvider::map_response(const nlohmann::json& body) {
  const auto& s = body.contains("spot") ? body.at("spot") : body;
  SpotInfo spot;
  spot.name = s.at("name").get<std::string>();
  spot.furigana = s.at("kana").get<std::string>();
  spot.image_ref = s.value("image_url", "");
  spot.map_point = {s.at("latitude").get<double>(), s.at("longitude").get<double>()};
  spot.open_hours = s.value("business_hours", "");
  if (s.contains("price") && s["price"].is_number_integer()) {
    spot.fee_yen = s["price"].get<int>();
  } else {
    spot.fee_note = s.value("price", "");
  }
  spot.stay_minutes = s.value("stay_time", 60);
  spot.blurb = s.value("description", "");
  spot.aliases = s.value("aliases", std::vector<std::string>{});
  validate(spot);
  return spot;
}

SpotInfo RemoteSpotProvider::lookup(std::string_view name_or_alias) const {
  // Canonicalize through the local index first; the service only knows canonical names.
  const auto canonical = index_->lookup(name_or_alias).name;
  auto res = get(endpoint_, "/spots?name=" + canonical, api_key_,
                 timeout_seconds_);
  if (!res || res->status != 200) return index_->lookup(canonical);
  const auto body = nlohmann::json::parse(res->body, nullptr, false);
  if (body.is_discarded()) return index_->lookup(canonical);
  try {
    auto spot = map_response(body);
    spot.name = canonical;
    return spot;
  } catch (const std::exception&) {
    return index_->lookup(canonical);
  }
}

}  // namespace tabi
