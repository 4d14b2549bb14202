#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace tabi {

struct GeoPoint {
  double latitude = 0.0;
  double longitude = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

struct SpotInfo {
  std::string name;
  std::string furigana;
  std::string image_ref;
  GeoPoint map_point;
  std::string open_hours;
  std::optional<int> fee_yen;  // 0 = free; empty when only `fee_note` applies
  std::string fee_note;
  int stay_minutes = 0;
  std::string blurb;
  std::vector<std::string> aliases;

  std::string fee_text() const;

  friend bool operator==(const SpotInfo&, const SpotInfo&) = default;
};

void validate(const SpotInfo& spot);
SpotInfo spot_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SpotInfo& spot);

enum class TransitMode { walk, bus, train, taxi };

std::string_view to_string(TransitMode mode);
TransitMode transit_mode_from_string(std::string_view name);

struct RouteLeg {
  std::string from;
  std::string to;
  TransitMode mode = TransitMode::walk;
  int minutes = 0;
  std::optional<std::string> line_name;
  std::optional<int> fare_yen;

  friend bool operator==(const RouteLeg&, const RouteLeg&) = default;
};

struct RoutePlan {
  std::vector<RouteLeg> legs;
  int total_minutes = 0;
  std::string narrative;
  bool approximate = false;
};

/// Minutes since midnight.
class ClockTime {
 public:
  constexpr ClockTime() = default;
  constexpr explicit ClockTime(int minutes) : minutes_(minutes) {}
  static ClockTime parse(std::string_view hhmm);

  constexpr int minutes() const { return minutes_; }
  std::string to_string() const;
  ClockTime operator+(int delta) const { return ClockTime(minutes_ + delta); }

  friend constexpr auto operator<=>(const ClockTime&, const ClockTime&) = default;

 private:
  int minutes_ = 0;
};

enum class Activity { visit, transit, end };

struct ScheduleEntry {
  ClockTime time;
  Activity activity = Activity::visit;
  std::string label;
};

struct Schedule {
  std::vector<ScheduleEntry> entries;
};

std::string render_schedule(const Schedule& schedule);

// Providers -----------------------------------------------------------------

class SpotProvider {
 public:
  virtual ~SpotProvider() = default;
  /// Resolves a canonical name or alias. Throws `unknown-spot`.
  virtual SpotInfo lookup(std::string_view name_or_alias) const = 0;
  /// Every spot the provider knows; used to build mention indices.
  virtual std::vector<SpotInfo> all() const = 0;
};

/// Spot facts loaded from a JSON-lines fixture.
class FixtureSpotProvider : public SpotProvider {
 public:
  explicit FixtureSpotProvider(std::vector<SpotInfo> spots);
  static FixtureSpotProvider load(const std::filesystem::path& path);

  SpotInfo lookup(std::string_view name_or_alias) const override;
  std::vector<SpotInfo> all() const override { return spots_; }

 private:
  std::vector<SpotInfo> spots_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

class RouteProvider {
 public:
  virtual ~RouteProvider() = default;
  /// Throws `no-route` or `provider-unavailable`.
  virtual std::vector<RouteLeg> route(const SpotInfo& from, const SpotInfo& to) const = 0;
};

/// Canned routes keyed by (from, to); a reverse entry is used backwards.
class FixtureRouteProvider : public RouteProvider {
 public:
  explicit FixtureRouteProvider(std::map<std::pair<std::string, std::string>, std::vector<RouteLeg>> routes);
  static FixtureRouteProvider load(const std::filesystem::path& path);

  std::vector<RouteLeg> route(const SpotInfo& from, const SpotInfo& to) const override;

 private:
  std::map<std::pair<std::string, std::string>, std::vector<RouteLeg>> routes_;
};

/// Maps a transit-search service's JSON (sections of points and moves) into
/// route legs.
class RemoteRouteProvider : public RouteProvider {
 public:
  RemoteRouteProvider(std::string endpoint, std::string api_key, int timeout_seconds = 10);
  std::vector<RouteLeg> route(const SpotInfo& from, const SpotInfo& to) const override;

  static std::vector<RouteLeg> map_response(const nlohmann::json& body, const SpotInfo& from,
                                            const SpotInfo& to);

 private:
  std::string endpoint_;
  std::string api_key_;
  int timeout_seconds_;
};

/// Spot facts from a sightseeing-information service; the fixture keeps the
/// full spot list for mention indexing.
class RemoteSpotProvider : public SpotProvider {
 public:
  RemoteSpotProvider(std::string endpoint, std::string api_key,
                     std::shared_ptr<const SpotProvider> fallback_index, int timeout_seconds = 10);
  SpotInfo lookup(std::string_view name_or_alias) const override;
  std::vector<SpotInfo> all() const override { return index_->all(); }

  static SpotInfo map_response(const nlohmann::json& body);

 private:
  std::string endpoint_;
  std::string api_key_;
  std::shared_ptr<const SpotProvider> index_;
  int timeout_seconds_;
};

// Narrative templates ---------------------------------------------------------

/// Named sentence templates used to turn routes into prompt text. File format:
/// one `key=template` per line, `#` comments allowed.
struct RouteTemplates {
  std::string same_place;
  std::string header;
  std::string leg;
  std::string line_clause;
  std::string fare_clause;
  std::string approximate_note;
  std::map<TransitMode, std::string> mode_names;

  static RouteTemplates defaults();
  static RouteTemplates load(const std::filesystem::path& path);
};

std::string render_route_nl(const RoutePlan& plan, const RouteTemplates& templates);

// Hub -------------------------------------------------------------------------

/// Walking speed used for straight-line estimates, metres per minute.
inline constexpr double kWalkingMetresPerMinute = 80.0;

double distance_metres(const GeoPoint& a, const GeoPoint& b);
RoutePlan approximate_walk(const SpotInfo& from, const SpotInfo& to, const RouteTemplates& templates);

/// Checks chaining and the total; throws `invalid-argument` when violated.
void validate(const RoutePlan& plan);

class KnowledgeHub {
 public:
  KnowledgeHub(std::shared_ptr<const SpotProvider> spots, std::shared_ptr<const RouteProvider> routes,
               RouteTemplates templates = RouteTemplates::defaults());

  SpotInfo get_spot(std::string_view name_or_alias) const;
  std::vector<SpotInfo> all_spots() const { return spots_->all(); }

  /// Same spot gives an empty plan. `provider-unavailable` degrades to a
  /// flagged walking estimate; `no-route` propagates.
  RoutePlan find_route(const SpotInfo& from, const SpotInfo& to) const;

  std::string render_route(const RoutePlan& plan) const { return render_route_nl(plan, templates_); }
  const RouteTemplates& templates() const { return templates_; }

 private:
  std::shared_ptr<const SpotProvider> spots_;
  std::shared_ptr<const RouteProvider> routes_;
  RouteTemplates templates_;
};

inline constexpr ClockTime kDefaultDayCutoff{18 * 60};

/// start -> visit first -> transit -> visit second -> end. Throws
/// `day-overflow` when the end passes `cutoff`.
Schedule build_schedule(const SpotInfo& first, const SpotInfo& second, const RoutePlan& route,
                        ClockTime start, ClockTime cutoff = kDefaultDayCutoff);

}  // namespace tabi
