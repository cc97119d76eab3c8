#include <gtest/gtest.h>

// Eigen before httplib: <resolv.h> defines a _res macro.
#include "coord_support.hpp"
#include "saopt/http.hpp"

#include <httplib.h>

#include <json.hpp>

using namespace saopt;
using namespace saopt::testing;
using nlohmann::json;

namespace {

struct Served {
  AdaptationService service{std::make_unique<Coordinator>(scripted_ddm(3, 10), platoon_fallback(), identity_rules(2)), true};
  HttpServer server{service};
  httplib::Client raw{"127.0.0.1", server.port()};
  HttpClient client{"127.0.0.1", server.port()};
};

}  // namespace

TEST(Http, ValidObservationIsAccepted) {
  Served s;
  auto obs = scripted_observation(30.0, 0, s.client.adaptation().decision, 0.5);
  auto res = s.raw.Post("/observations", observation_to_json(obs), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  auto ack = ack_from_json(res->body);
  EXPECT_TRUE(ack.accepted);
  EXPECT_TRUE(ack.errors.empty());
  ASSERT_TRUE(s.service.wait_processed(1, std::chrono::seconds(10)));
  EXPECT_EQ(json::parse(s.client.health())["processed"], 1);
}

TEST(Http, MissingMetricIsUnprocessable) {
  Served s;
  auto obs = scripted_observation(30.0, 0, s.client.adaptation().decision, 0.5);
  obs.metrics.erase("throughput");
  auto res = s.raw.Post("/observations", observation_to_json(obs), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 422);
  auto ack = ack_from_json(res->body);
  EXPECT_FALSE(ack.accepted);
  ASSERT_FALSE(ack.errors.empty());
  EXPECT_NE(ack.errors.front().find("throughput"), std::string::npos);
}

TEST(Http, NonNumericFieldIsUnprocessable) {
  Served s;
  auto body = json::parse(observation_to_json(scripted_observation(30.0, 0, s.client.adaptation().decision, 0.5)));
  body["context"]["avg_car_speed"] = "fast";
  auto res = s.raw.Post("/observations", body.dump(), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 422);
  EXPECT_NE(res->body.find("context.avg_car_speed"), std::string::npos);
}

TEST(Http, MalformedBodyIsABadRequest) {
  Served s;
  for (std::string body : {"{not json", "[1, 2]", "{\"timestamp\": 1}"}) {
    auto res = s.raw.Post("/observations", body, "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 400) << body;
    EXPECT_FALSE(ack_from_json(res->body).accepted);
  }
  EXPECT_EQ(s.service.health().received, 0u);
}

TEST(Http, AdaptationsServeTheNewestDecision) {
  Served s;
  auto first = s.client.adaptation();
  EXPECT_EQ(first.seq, 0u);
  EXPECT_EQ(first.decision, initial_decision(scripted_ddm(3, 10)));

  AdaptationDecision active = first.decision;
  std::size_t last = 0;
  for (std::size_t i = 0; i < 30; ++i) {
    ASSERT_TRUE(s.client.post_observation(scripted_observation(30.0 * (i + 1), 0, active, 0.5)).accepted);
    auto snap = s.client.adaptation_after(i + 1);
    ASSERT_GE(snap.seq, last);
    if (snap.seq > last) active = snap.decision;
    last = snap.seq;
  }
  s.service.stop();
  const auto& log = s.service.coordinator().model().decision_log;
  EXPECT_EQ(last, log.size());
  ASSERT_FALSE(log.empty());
  EXPECT_EQ(active, log.back().decision);

  auto body = json::parse(s.raw.Get("/adaptations")->body);
  EXPECT_EQ(body["seq"], last);
  EXPECT_EQ(body["strategy"], active.strategy);
  EXPECT_EQ(s.raw.Get("/adaptations")->body, s.raw.Get("/adaptations")->body);
}

TEST(Http, BadProcessedCountIsABadRequest) {
  Served s;
  auto res = s.raw.Get("/adaptations?processed=many");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
}

TEST(Http, HealthReportsCounts) {
  Served s;
  auto h = json::parse(s.client.health());
  EXPECT_EQ(h["received"], 0);
  EXPECT_EQ(h["processed"], 0);
  EXPECT_EQ(h["decisions"], 0);
  EXPECT_EQ(h["running"], true);
}

TEST(Http, WireRoundTripKeepsEveryField) {
  Observation o = scripted_observation(90.0, 1, {"BestVelocity", {{"search_distance_front", 612.5}}}, 0.25);
  std::vector<std::string> errors;
  auto back = parse_wire_observation(observation_to_json(o), errors);
  EXPECT_TRUE(errors.empty());
  EXPECT_EQ(back.timestamp, o.timestamp);
  EXPECT_EQ(back.context, o.context);
  EXPECT_EQ(back.metrics, o.metrics);
  EXPECT_EQ(back.input, o.input);
  AdaptationSnapshot snap{7, o.input};
  auto snap_back = snapshot_from_json(snapshot_to_json(snap));
  EXPECT_EQ(snap_back.seq, 7u);
  EXPECT_EQ(snap_back.decision, o.input);
}

TEST(Http, ClientReportsAnUnreachableServer) {
  int port = 0;
  {
    Served s;
    port = s.server.port();
  }
  HttpClient c("127.0.0.1", port, std::chrono::seconds(1));
  EXPECT_THROW(c.health(), TransportError);
}
