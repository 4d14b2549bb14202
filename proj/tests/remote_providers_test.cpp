#include <gtest/gtest.h>
#include <httplib.h>

#include <nlohmann/json.hpp>
#include <thread>

#include "support.hpp"
#include "tabi/error.hpp"
#include "tabi/knowledge.hpp"

using namespace tabi;

namespace {

const nlohmann::json kRouteBody = nlohmann::json::parse(R"({
  "items": [{
    "summary": {"move": {"time": 60}},
    "sections": [
      {"type": "point", "name": "start"},
      {"type": "move", "move": "walk", "time": 10},
      {"type": "point", "name": "五条坂"},
      {"type": "move", "move": "local_bus", "time": 45, "line_name": "市バス205系統", "fare": 230},
      {"type": "point", "name": "金閣寺道"},
      {"type": "move", "move": "walk", "time": 5},
      {"type": "point", "name": "goal"}
    ]
  }]
})");

const nlohmann::json kSpotBody = nlohmann::json::parse(R"({
  "spot": {"name": "清水寺", "kana": "きよみずでら", "latitude": 34.9949, "longitude": 135.785,
           "business_hours": "6:00〜18:00", "price": 400, "stay_time": 70,
           "description": "remote blurb", "image_url": "https://example.invalid/k.jpg"}
})");

class FakeProviderServer {
 public:
  FakeProviderServer() {
    server_.Get("/route_transit", [this](const httplib::Request& req, httplib::Response& res) {
      last_key = req.get_header_value("X-Api-Key");
      if (route_status != 200) {
        res.status = route_status;
        return;
      }
      res.set_content(kRouteBody.dump(), "application/json");
    });
    server_.Get("/spots", [this](const httplib::Request& req, httplib::Response& res) {
      last_name = req.get_param_value("name");
      res.set_content(kSpotBody.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeProviderServer() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }

  int route_status = 200;
  std::string last_key;
  std::string last_name;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

std::shared_ptr<const SpotProvider> fixture_spots() {
  static auto p = std::make_shared<FixtureSpotProvider>(
      FixtureSpotProvider::load(support::data_dir() / "spots.jsonl"));
  return p;
}

}  // namespace

TEST(RemoteRouteProvider, MapsSectionsIntoChainedLegs) {
  const auto a = fixture_spots()->lookup("清水寺");
  const auto b = fixture_spots()->lookup("金閣寺");
  const auto legs = RemoteRouteProvider::map_response(kRouteBody, a, b);
  ASSERT_EQ(legs.size(), 3u);
  EXPECT_EQ(legs[0].from, "清水寺");
  EXPECT_EQ(legs[0].to, "五条坂");
  EXPECT_EQ(legs[1].mode, TransitMode::bus);
  EXPECT_EQ(legs[1].line_name, "市バス205系統");
  EXPECT_EQ(legs[1].fare_yen, 230);
  EXPECT_EQ(legs[2].to, "金閣寺");
}

TEST(RemoteRouteProvider, EmptyItemsIsNoRouteAndBrokenSectionsAreMalformed) {
  const auto a = fixture_spots()->lookup("清水寺");
  const auto b = fixture_spots()->lookup("金閣寺");
  try {
    RemoteRouteProvider::map_response(nlohmann::json{{"items", nlohmann::json::array()}}, a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::no_route);
  }
  auto broken = kRouteBody;
  broken["items"][0]["sections"].erase(0);
  EXPECT_THROW(RemoteRouteProvider::map_response(broken, a, b), Error);
}

TEST(RemoteRouteProvider, OverHttpFeedsTheHub) {
  FakeProviderServer server;
  KnowledgeHub hub(fixture_spots(), std::make_shared<RemoteRouteProvider>(server.endpoint(), "k1", 2));
  const auto plan = hub.find_route(hub.get_spot("清水寺"), hub.get_spot("金閣寺"));
  EXPECT_FALSE(plan.approximate);
  EXPECT_EQ(plan.total_minutes, 60);
  EXPECT_EQ(server.last_key, "k1");
}

TEST(RemoteRouteProvider, ServerFailureDegradesToApproximate) {
  FakeProviderServer server;
  server.route_status = 503;
  KnowledgeHub hub(fixture_spots(), std::make_shared<RemoteRouteProvider>(server.endpoint(), "", 2));
  const auto plan = hub.find_route(hub.get_spot("清水寺"), hub.get_spot("金閣寺"));
  EXPECT_TRUE(plan.approximate);

  server.route_status = 404;
  try {
    hub.find_route(hub.get_spot("清水寺"), hub.get_spot("金閣寺"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::no_route);
  }
}

TEST(RemoteSpotProvider, MapsFieldsAndKeepsCanonicalName) {
  const auto s = RemoteSpotProvider::map_response(kSpotBody);
  EXPECT_EQ(s.furigana, "きよみずでら");
  EXPECT_EQ(s.fee_yen, 400);
  EXPECT_EQ(s.stay_minutes, 70);

  FakeProviderServer server;
  RemoteSpotProvider remote(server.endpoint(), "", fixture_spots(), 2);
  const auto via_alias = remote.lookup("Kiyomizu Temple");
  EXPECT_EQ(via_alias.name, "清水寺");
  EXPECT_EQ(via_alias.blurb, "remote blurb");
  EXPECT_EQ(server.last_name, "清水寺");
  EXPECT_EQ(remote.all().size(), fixture_spots()->all().size());
}

TEST(RemoteSpotProvider, UnreachableServiceFallsBackToFixture) {
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  RemoteSpotProvider remote("http://127.0.0.1:" + std::to_string(port), "", fixture_spots(), 1);
  EXPECT_EQ(remote.lookup("清水寺"), fixture_spots()->lookup("清水寺"));
  EXPECT_THROW(remote.lookup("存在しない寺"), Error);
}
