#include "tabi/knowledge.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numbers>
#include <sstream>

#include "tabi/error.hpp"
#include "tabi/text.hpp"

namespace tabi {
namespace {

std::string fill(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out(tmpl);
  for (const auto& [key, value] : values) out = text::replace_all(out, "{" + key + "}", value);
  return out;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::config_error, "cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

nlohmann::json parse_record(const std::string& line, const std::filesystem::path& path, std::size_t n) {
  auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::config_error, path.string() + ":" + std::to_string(n) + ": bad record");
  }
  return j;
}

RouteLeg leg_from_json(const nlohmann::json& j) {
  RouteLeg leg;
  leg.from = j.at("from").get<std::string>();
  leg.to = j.at("to").get<std::string>();
  leg.mode = transit_mode_from_string(j.at("mode").get<std::string>());
  leg.minutes = j.at("minutes").get<int>();
  if (j.contains("line") && !j["line"].is_null()) leg.line_name = j["line"].get<std::string>();
  if (j.contains("fare") && !j["fare"].is_null()) leg.fare_yen = j["fare"].get<int>();
  return leg;
}

}  // namespace

std::string SpotInfo::fee_text() const {
  if (fee_yen) return *fee_yen == 0 ? std::string("無料") : std::to_string(*fee_yen) + "円";
  return fee_note;
}

void validate(const SpotInfo& spot) {
  if (text::trim(spot.name).empty()) throw Error(ErrorCode::invalid_argument, "spot without a name");
  if (text::trim(spot.furigana).empty()) {
    throw Error(ErrorCode::invalid_argument, spot.name + ": furigana must not be empty");
  }
  if (spot.map_point.latitude < -90.0 || spot.map_point.latitude > 90.0 ||
      spot.map_point.longitude < -180.0 || spot.map_point.longitude > 180.0) {
    throw Error(ErrorCode::invalid_argument, spot.name + ": map point out of range");
  }
  if (spot.stay_minutes <= 0) {
    throw Error(ErrorCode::invalid_argument, spot.name + ": stay_minutes must be positive");
  }
}

SpotInfo spot_from_json(const nlohmann::json& j) {
  SpotInfo spot;
  spot.name = j.at("name").get<std::string>();
  spot.furigana = j.at("furigana").get<std::string>();
  spot.image_ref = j.value("image", "");
  const auto& map = j.at("map");
  spot.map_point = {map.at("lat").get<double>(), map.at("lon").get<double>()};
  spot.open_hours = j.value("open_hours", "");
  if (j.contains("fee_yen") && !j["fee_yen"].is_null()) spot.fee_yen = j["fee_yen"].get<int>();
  spot.fee_note = j.value("fee_note", "");
  spot.stay_minutes = j.at("stay_minutes").get<int>();
  spot.blurb = j.value("blurb", "");
  spot.aliases = j.value("aliases", std::vector<std::string>{});
  validate(spot);
  return spot;
}

nlohmann::json to_json(const SpotInfo& spot) {
  nlohmann::json j{
      {"name", spot.name},
      {"furigana", spot.furigana},
      {"image", spot.image_ref},
      {"map", {{"lat", spot.map_point.latitude}, {"lon", spot.map_point.longitude}}},
      {"open_hours", spot.open_hours},
      {"fee_yen", spot.fee_yen ? nlohmann::json(*spot.fee_yen) : nlohmann::json(nullptr)},
      {"fee_note", spot.fee_note},
      {"stay_minutes", spot.stay_minutes},
      {"blurb", spot.blurb},
      {"aliases", spot.aliases},
  };
  return j;
}

std::string_view to_string(TransitMode mode) {
  switch (mode) {
    case TransitMode::walk: return "walk";
    case TransitMode::bus: return "bus";
    case TransitMode::train: return "train";
    case TransitMode::taxi: return "taxi";
  }
  return "?";
}

TransitMode transit_mode_from_string(std::string_view name) {
  if (name == "walk") return TransitMode::walk;
  if (name == "bus") return TransitMode::bus;
  if (name == "train") return TransitMode::train;
  if (name == "taxi") return TransitMode::taxi;
  throw Error(ErrorCode::parse_failure, "unknown transit mode: " + std::string(name));
}

ClockTime ClockTime::parse(std::string_view hhmm) {
  const auto colon = hhmm.find(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 3 != hhmm.size()) {
    throw Error(ErrorCode::invalid_argument, "expected HH:MM, got " + std::string(hhmm));
  }
  int hours = 0;
  int minutes = 0;
  try {
    hours = std::stoi(std::string(hhmm.substr(0, colon)));
    minutes = std::stoi(std::string(hhmm.substr(colon + 1)));
  } catch (const std::exception&) {
    throw Error(ErrorCode::invalid_argument, "expected HH:MM, got " + std::string(hhmm));
  }
  if (hours < 0 || hours > 23 || minutes < 0 || minutes > 59) {
    throw Error(ErrorCode::invalid_argument, "time out of range: " + std::string(hhmm));
  }
  return ClockTime(hours * 60 + minutes);
}

std::string ClockTime::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d:%02d", minutes_ / 60, minutes_ % 60);
  return buf;
}

std::string render_schedule(const Schedule& schedule) {
  std::vector<std::string> lines;
  const auto& e = schedule.entries;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const int span = i + 1 < e.size() ? e[i + 1].time.minutes() - e[i].time.minutes() : 0;
    switch (e[i].activity) {
      case Activity::visit:
        lines.push_back(e[i].time.to_string() + " " + e[i].label + "を見学（" + std::to_string(span) + "分）");
        break;
      case Activity::transit:
        lines.push_back(e[i].time.to_string() + " " + e[i].label + "（" + std::to_string(span) + "分）");
        break;
      case Activity::end:
        lines.push_back(e[i].time.to_string() + " " + e[i].label);
        break;
    }
  }
  return text::join(lines, "\n");
}

FixtureSpotProvider::FixtureSpotProvider(std::vector<SpotInfo> spots) : spots_(std::move(spots)) {
  for (std::size_t i = 0; i < spots_.size(); ++i) {
    validate(spots_[i]);
    if (!index_.emplace(spots_[i].name, i).second) {
      throw Error(ErrorCode::config_error, "duplicate spot name: " + spots_[i].name);
    }
  }
  for (std::size_t i = 0; i < spots_.size(); ++i) {
    for (const auto& alias : spots_[i].aliases) {
      const auto [it, inserted] = index_.emplace(alias, i);
      if (!inserted && it->second != i) {
        throw Error(ErrorCode::config_error, "alias maps to two spots: " + alias);
      }
    }
  }
}

FixtureSpotProvider FixtureSpotProvider::load(const std::filesystem::path& path) {
  std::vector<SpotInfo> spots;
  std::size_t n = 0;
  for (const auto& line : read_lines(path)) {
    ++n;
    if (text::trim(line).empty()) continue;
    try {
      spots.push_back(spot_from_json(parse_record(line, path, n)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::config_error, path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return FixtureSpotProvider(std::move(spots));
}

SpotInfo FixtureSpotProvider::lookup(std::string_view name_or_alias) const {
  const auto key = text::trim(name_or_alias);
  auto it = index_.find(key);
  if (it == index_.end()) {
    // ASCII aliases are matched case-insensitively.
    const auto lowered = text::to_lower_ascii(key);
    for (auto jt = index_.begin(); jt != index_.end(); ++jt) {
      if (text::to_lower_ascii(jt->first) == lowered) {
        it = jt;
        break;
      }
    }
  }
  if (it == index_.end()) throw Error(ErrorCode::unknown_spot, "unknown spot: " + std::string(key));
  return spots_[it->second];
}

FixtureRouteProvider::FixtureRouteProvider(
    std::map<std::pair<std::string, std::string>, std::vector<RouteLeg>> routes)
    : routes_(std::move(routes)) {}

FixtureRouteProvider FixtureRouteProvider::load(const std::filesystem::path& path) {
  std::map<std::pair<std::string, std::string>, std::vector<RouteLeg>> routes;
  std::size_t n = 0;
  for (const auto& line : read_lines(path)) {
    ++n;
    if (text::trim(line).empty()) continue;
    const auto j = parse_record(line, path, n);
    try {
      std::vector<RouteLeg> legs;
      for (const auto& leg : j.at("legs")) legs.push_back(leg_from_json(leg));
      routes[{j.at("from").get<std::string>(), j.at("to").get<std::string>()}] = std::move(legs);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::config_error, path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return FixtureRouteProvider(std::move(routes));
}

std::vector<RouteLeg> FixtureRouteProvider::route(const SpotInfo& from, const SpotInfo& to) const {
  if (auto it = routes_.find({from.name, to.name}); it != routes_.end()) return it->second;
  if (auto it = routes_.find({to.name, from.name}); it != routes_.end()) {
    std::vector<RouteLeg> legs(it->second.rbegin(), it->second.rend());
    for (auto& leg : legs) std::swap(leg.from, leg.to);
    return legs;
  }
  throw Error(ErrorCode::no_route, "no route from " + from.name + " to " + to.name);
}

RouteTemplates RouteTemplates::defaults() {
  RouteTemplates t;
  t.same_place = "出発地と目的地が同じです。";
  t.header = "{from}から{to}までの経路です（所要時間 合計{total}分）。";
  t.leg = "{index}. {from}から{to}まで{mode}{line}で{minutes}分{fare}。";
  t.line_clause = "（{line}）";
  t.fare_clause = "、運賃{fare}円";
  t.approximate_note = "※経路情報を取得できなかったため、徒歩での概算です。";
  t.mode_names = {{TransitMode::walk, "徒歩"},
                  {TransitMode::bus, "バス"},
                  {TransitMode::train, "電車"},
                  {TransitMode::taxi, "タクシー"}};
  return t;
}

RouteTemplates RouteTemplates::load(const std::filesystem::path& path) {
  auto t = defaults();
  for (const auto& raw : read_lines(path)) {
    const auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::config_error, path.string() + ": expected key=template");
    }
    const auto key = std::string(text::trim(line.substr(0, eq)));
    const auto value = std::string(line.substr(eq + 1));
    if (key == "same_place") t.same_place = value;
    else if (key == "header") t.header = value;
    else if (key == "leg") t.leg = value;
    else if (key == "line_clause") t.line_clause = value;
    else if (key == "fare_clause") t.fare_clause = value;
    else if (key == "approximate_note") t.approximate_note = value;
    else if (key.rfind("mode.", 0) == 0) t.mode_names[transit_mode_from_string(key.substr(5))] = value;
    else throw Error(ErrorCode::config_error, path.string() + ": unknown template key " + key);
  }
  return t;
}

std::string render_route_nl(const RoutePlan& plan, const RouteTemplates& templates) {
  if (plan.legs.empty()) return templates.same_place;
  std::vector<std::string> lines;
  lines.push_back(fill(templates.header, {{"from", plan.legs.front().from},
                                          {"to", plan.legs.back().to},
                                          {"total", std::to_string(plan.total_minutes)}}));
  for (std::size_t i = 0; i < plan.legs.size(); ++i) {
    const auto& leg = plan.legs[i];
    const auto mode = templates.mode_names.count(leg.mode) ? templates.mode_names.at(leg.mode)
                                                           : std::string(to_string(leg.mode));
    const auto line = leg.line_name ? fill(templates.line_clause, {{"line", *leg.line_name}}) : "";
    const auto fare =
        leg.fare_yen ? fill(templates.fare_clause, {{"fare", std::to_string(*leg.fare_yen)}}) : "";
    lines.push_back(fill(templates.leg, {{"index", std::to_string(i + 1)},
                                         {"from", leg.from},
                                         {"to", leg.to},
                                         {"mode", mode},
                                         {"line", line},
                                         {"minutes", std::to_string(leg.minutes)},
                                         {"fare", fare}}));
  }
  if (plan.approximate) lines.push_back(templates.approximate_note);
  return text::join(lines, "\n");
}

double distance_metres(const GeoPoint& a, const GeoPoint& b) {
  constexpr double kEarthRadius = 6'371'000.0;
  constexpr double kRad = std::numbers::pi / 180.0;
  const double dlat = (b.latitude - a.latitude) * kRad;
  const double dlon = (b.longitude - a.longitude) * kRad;
  const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(a.latitude * kRad) * std::cos(b.latitude * kRad) * std::sin(dlon / 2) *
                       std::sin(dlon / 2);
  return 2 * kEarthRadius * std::asin(std::min(1.0, std::sqrt(h)));
}

RoutePlan approximate_walk(const SpotInfo& from, const SpotInfo& to, const RouteTemplates& templates) {
  RoutePlan plan;
  const auto minutes =
      std::max(1, static_cast<int>(std::ceil(distance_metres(from.map_point, to.map_point) /
                                             kWalkingMetresPerMinute)));
  plan.legs.push_back({from.name, to.name, TransitMode::walk, minutes, std::nullopt, std::nullopt});
  plan.total_minutes = minutes;
  plan.approximate = true;
  plan.narrative = render_route_nl(plan, templates);
  return plan;
}

void validate(const RoutePlan& plan) {
  int total = 0;
  for (std::size_t i = 0; i < plan.legs.size(); ++i) {
    if (plan.legs[i].minutes <= 0) throw Error(ErrorCode::invalid_argument, "route leg with no duration");
    if (i + 1 < plan.legs.size() && plan.legs[i].to != plan.legs[i + 1].from) {
      throw Error(ErrorCode::invalid_argument, "route legs do not chain at " + plan.legs[i].to);
    }
    total += plan.legs[i].minutes;
  }
  if (total != plan.total_minutes) throw Error(ErrorCode::invalid_argument, "route total mismatch");
}

KnowledgeHub::KnowledgeHub(std::shared_ptr<const SpotProvider> spots,
                           std::shared_ptr<const RouteProvider> routes, RouteTemplates templates)
    : spots_(std::move(spots)), routes_(std::move(routes)), templates_(std::move(templates)) {
  if (!spots_ || !routes_) throw Error(ErrorCode::invalid_argument, "knowledge hub needs providers");
}

SpotInfo KnowledgeHub::get_spot(std::string_view name_or_alias) const {
  return spots_->lookup(name_or_alias);
}

RoutePlan KnowledgeHub::find_route(const SpotInfo& from, const SpotInfo& to) const {
  RoutePlan plan;
  if (from.name == to.name) {
    plan.narrative = render_route_nl(plan, templates_);
    return plan;
  }
  try {
    plan.legs = routes_->route(from, to);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::provider_unavailable) return approximate_walk(from, to, templates_);
    throw;
  }
  if (plan.legs.empty()) throw Error(ErrorCode::no_route, "empty route from " + from.name);
  for (const auto& leg : plan.legs) plan.total_minutes += leg.minutes;
  validate(plan);
  if (plan.legs.front().from != from.name || plan.legs.back().to != to.name) {
    throw Error(ErrorCode::invalid_argument, "route does not connect " + from.name + " and " + to.name);
  }
  plan.narrative = render_route_nl(plan, templates_);
  return plan;
}

Schedule build_schedule(const SpotInfo& first, const SpotInfo& second, const RoutePlan& route,
                        ClockTime start, ClockTime cutoff) {
  if (first.name == second.name) {
    throw Error(ErrorCode::invalid_argument, "schedule needs two distinct spots");
  }
  if (start.minutes() < 0 || start.minutes() >= 24 * 60) {
    throw Error(ErrorCode::invalid_argument, "start time outside the day");
  }
  Schedule schedule;
  auto t = start;
  schedule.entries.push_back({t, Activity::visit, first.name});
  t = t + first.stay_minutes;
  if (route.total_minutes > 0) {
    schedule.entries.push_back({t, Activity::transit, "移動"});
    t = t + route.total_minutes;
  }
  schedule.entries.push_back({t, Activity::visit, second.name});
  t = t + second.stay_minutes;
  schedule.entries.push_back({t, Activity::end, "解散"});
  if (t > cutoff) {
    throw Error(ErrorCode::day_overflow,
                "schedule ends at " + t.to_string() + ", after the " + cutoff.to_string() + " cutoff");
  }
  return schedule;
}

}  // namespace tabi
