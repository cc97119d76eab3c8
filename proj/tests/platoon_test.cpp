#include <gtest/gtest.h>

#include <algorithm>
#include <map>

#include "saopt/adapter.hpp"
#include "saopt/platoon.hpp"

using namespace saopt;
using namespace saopt::platoon;

namespace {

Scenario quiet(int lanes = 4) {
  Scenario s;
  s.name = "test";
  s.profile = SpawnProfile::preset("empty");
  s.lanes = lanes;
  return s;
}

void run_for(Simulator& sim, double seconds) {
  const int steps = static_cast<int>(seconds / sim.scenario().dt + 0.5);
  for (int i = 0; i < steps; ++i) sim.step();
}

StrategyParams no_wait() {
  StrategyParams p;
  p.advertising_duration = 0;
  return p;
}

}  // namespace

TEST(Simulator, LoneCarReachesAndHoldsItsDesiredSpeed) {
  Simulator sim(quiet());
  int id = sim.add_vehicle(VehicleKind::Car, 0.0, 4, 0.0, 120.0, false);
  run_for(sim, 60.0);
  EXPECT_NEAR(kmh(sim.vehicle(id)->speed), 120.0, 1e-6);
  run_for(sim, 60.0);
  EXPECT_NEAR(kmh(sim.vehicle(id)->speed), 120.0, 1e-6);
}

TEST(Simulator, FollowerSlowsDownBehindSlowerLeader) {
  Simulator sim(quiet(1));
  int leader = sim.add_vehicle(VehicleKind::Car, 105.0, 1, 80.0, 80.0, false);
  int follower = sim.add_vehicle(VehicleKind::Car, 100.0, 1, 120.0, 120.0, false);
  for (int i = 0; i < 240; ++i) {
    sim.step();
    ASSERT_LT(sim.vehicle(follower)->position, sim.vehicle(leader)->position) << "step " << i;
  }
  EXPECT_NEAR(kmh(sim.vehicle(follower)->speed), 80.0, 1.0);
}

TEST(Simulator, PlatoonGapConvergesToTenMetres) {
  Simulator sim(quiet());
  int a = sim.add_vehicle(VehicleKind::Car, 200.0, 2, 100.0, 100.0, true);
  int b = sim.add_vehicle(VehicleKind::Car, 170.0, 2, 100.0, 100.0, true);
  sim.form_platoon({a, b});
  run_for(sim, 60.0);
  const double gap = sim.vehicle(a)->position - sim.vehicle(b)->position;
  EXPECT_NEAR(gap, kPlatoonGap, 1.0);
  EXPECT_NEAR(sim.vehicle(b)->speed, sim.vehicle(a)->speed, 0.5);
}

TEST(Simulator, LoneVehicleWithoutCandidatesStaysUnplatooned) {
  Simulator sim(quiet());
  sim.configure(Strategy::BestVelocity, no_wait());
  int id = sim.add_vehicle(VehicleKind::Car, 0.0, 2, 100.0, 100.0, true);
  run_for(sim, 120.0);
  EXPECT_FALSE(sim.vehicle(id)->platoon.has_value());
  EXPECT_FALSE(sim.vehicle(id)->joining.has_value());
  EXPECT_EQ(sim.counters().joins_started, 0u);
}

namespace {

// A joiner with two platoons ahead: one 50 m away 8 km/h faster, one 100 m
// away 3 km/h faster.
struct TwoCandidates {
  Simulator sim{quiet()};
  int joiner = 0, near_platoon = 0, matched_platoon = 0;

  explicit TwoCandidates(Strategy s) {
    sim.configure(s, no_wait());
    sim.step();  // apply the configuration
    joiner = sim.add_vehicle(VehicleKind::Car, 1000.0, 2, 100.0, 100.0, true);
    int n1 = sim.add_vehicle(VehicleKind::Car, 1060.0, 3, 108.0, 108.0, true);
    int n2 = sim.add_vehicle(VehicleKind::Car, 1050.0, 3, 108.0, 108.0, true);
    near_platoon = sim.form_platoon({n1, n2});
    int m1 = sim.add_vehicle(VehicleKind::Car, 1110.0, 4, 103.0, 103.0, true);
    int m2 = sim.add_vehicle(VehicleKind::Car, 1100.0, 4, 103.0, 103.0, true);
    matched_platoon = sim.form_platoon({m1, m2});
    sim.coordinate();
  }
};

}  // namespace

TEST(Coordination, BestVelocityPicksTheSmallestSpeedDifference) {
  TwoCandidates t(Strategy::BestVelocity);
  ASSERT_TRUE(t.sim.vehicle(t.joiner)->joining.has_value());
  EXPECT_EQ(*t.sim.vehicle(t.joiner)->joining, t.matched_platoon);
}

TEST(Coordination, BestDistancePicksTheNearestWithinTheSpeedLimit) {
  TwoCandidates t(Strategy::BestDistance);
  ASSERT_TRUE(t.sim.vehicle(t.joiner)->joining.has_value());
  EXPECT_EQ(*t.sim.vehicle(t.joiner)->joining, t.near_platoon);
}

TEST(Coordination, BestDistanceSkipsCandidatesAboveMaxSpeedDifference) {
  Simulator sim(quiet());
  StrategyParams p = no_wait();
  p.max_speed_difference = 5;
  sim.configure(Strategy::BestDistance, p);
  sim.step();
  int joiner = sim.add_vehicle(VehicleKind::Car, 1000.0, 2, 100.0, 100.0, true);
  int a = sim.add_vehicle(VehicleKind::Car, 1060.0, 3, 108.0, 108.0, true);
  int b = sim.add_vehicle(VehicleKind::Car, 1050.0, 3, 108.0, 108.0, true);
  sim.form_platoon({a, b});
  sim.coordinate();
  EXPECT_FALSE(sim.vehicle(joiner)->joining.has_value());
}

TEST(Coordination, CarsAndTrucksDoNotPlatoonTogether) {
  Simulator sim(quiet());
  sim.configure(Strategy::BestVelocity, no_wait());
  sim.step();
  int truck = sim.add_vehicle(VehicleKind::Truck, 1000.0, 1, 80.0, 80.0, true);
  int a = sim.add_vehicle(VehicleKind::Car, 1060.0, 2, 85.0, 85.0, true);
  int b = sim.add_vehicle(VehicleKind::Car, 1050.0, 2, 85.0, 85.0, true);
  sim.form_platoon({a, b});
  sim.coordinate();
  EXPECT_FALSE(sim.vehicle(truck)->joining.has_value());
}

TEST(Coordination, LaneThresholdsPlaceCruise110InLaneTwo) {
  Simulator sim(quiet());
  StrategyParams p;
  p.speed_threshold_lane2 = 100;
  p.speed_threshold_lane3 = 130;
  p.speed_threshold_lane4 = 160;
  sim.configure(Strategy::BestDistanceAndLane, p);
  sim.step();
  EXPECT_EQ(sim.lane_for_cruise(110.0), 2);
  EXPECT_EQ(sim.lane_for_cruise(99.0), 1);
  EXPECT_EQ(sim.lane_for_cruise(130.0), 3);

  int a = sim.add_vehicle(VehicleKind::Car, 500.0, 4, 110.0, 110.0, true);
  int b = sim.add_vehicle(VehicleKind::Car, 490.0, 4, 110.0, 110.0, true);
  int pid = sim.form_platoon({a, b});
  run_for(sim, 30.0);
  EXPECT_EQ(sim.platoons().at(pid).lane, 2);
  EXPECT_EQ(sim.vehicle(a)->lane, 2);
  EXPECT_EQ(sim.vehicle(b)->lane, 2);
}

TEST(Coordination, JoinCompletesBehindTheTail) {
  Simulator sim(quiet());
  sim.configure(Strategy::BestDistance, no_wait());
  int a = sim.add_vehicle(VehicleKind::Car, 400.0, 2, 95.0, 95.0, true);
  int b = sim.add_vehicle(VehicleKind::Car, 390.0, 2, 95.0, 95.0, true);
  int pid = sim.form_platoon({a, b});
  int joiner = sim.add_vehicle(VehicleKind::Car, 200.0, 3, 100.0, 100.0, true);
  run_for(sim, 120.0);
  const auto& members = sim.platoons().at(pid).members;
  ASSERT_EQ(members.size(), 3u);
  EXPECT_EQ(members.back(), joiner);
  EXPECT_EQ(sim.counters().joins_completed, 1u);
}

TEST(Strategies, NamesRoundTripAndUnknownNamesAreRejected) {
  for (auto s : {Strategy::BestDistance, Strategy::BestVelocity, Strategy::BestDistanceAndLane}) {
    EXPECT_EQ(strategy_from_string(to_string(s)), s);
  }
  EXPECT_FALSE(strategy_from_string("Convoy").has_value());
}

TEST(Scenario, ParsesFileAndCountsObservations) {
  auto s = parse_scenario(
      "name: weekend\nprofile: {preset: weekend, scale: 0.5}\nhours: 14\nseed: 9\ncar_desired_mean: 104\n");
  EXPECT_EQ(s.name, "weekend");
  EXPECT_EQ(s.seed, 9u);
  EXPECT_EQ(s.observations(), 1680u);
  EXPECT_DOUBLE_EQ(s.car_desired_mean, 104.0);
  EXPECT_NEAR(s.profile.rate_per_hour(12.5 * 3600), 0.5 * SpawnProfile::preset("weekend").rate_per_hour(12.5 * 3600), 1e-9);
  EXPECT_THROW(parse_scenario("name: x\nlane_count: 3\n"), std::invalid_argument);
}

TEST(Scenario, ProfilesHaveTheirPeaks) {
  auto wd = SpawnProfile::preset("weekday");
  auto we = SpawnProfile::preset("weekend");
  auto max_rate = [](const SpawnProfile& p, double from_h, double to_h) {
    double best = 0;
    for (double h = from_h; h <= to_h; h += 0.25) best = std::max(best, p.rate_per_hour(h * 3600));
    return best;
  };
  EXPECT_NEAR(max_rate(wd, 6, 9), 600, 50);
  EXPECT_NEAR(max_rate(wd, 13, 15), 600, 50);
  EXPECT_LT(wd.rate_per_hour(11 * 3600), max_rate(wd, 6, 9));
  EXPECT_NEAR(max_rate(we, 11, 14), 300, 30);
  for (double h = 0; h <= 14; h += 0.5) {
    EXPECT_GE(wd.rate_per_hour(h * 3600), 0.0);
    EXPECT_GE(we.rate_per_hour(h * 3600), 0.0);
  }
}

TEST(Metrics, SparseFreeFlowHasNoTimeLossAndNoPlatooning) {
  Scenario s;
  s.name = "sparse";
  s.profile.points = {{0.0, 30.0}, {2.0, 30.0}};
  s.platooning_share = 0.0;
  s.hours = 2.0;
  Simulator sim(s);
  Preprocessor pre;
  AdaptationDecision input{"BestDistance", {}};
  int with_exits = 0;
  for (std::size_t w = 0; w < s.observations(); ++w) {
    std::vector<RawMonitoringRecord> raw;
    for (int i = 0; i < 60; ++i) raw.push_back(sim.step());
    auto obs = pre(raw, s.observation_window, input);
    EXPECT_EQ(obs.metrics.at("platoon_utilization"), 0.0);
    EXPECT_EQ(obs.metrics.at("platoon_time"), 0.0);
    bool exits = std::any_of(raw.begin(), raw.end(), [](const auto& r) { return !r.exits.empty(); });
    if (exits) {
      ++with_exits;
      EXPECT_GT(obs.metrics.at("time_loss"), 0.95) << "window " << w;
    }
  }
  EXPECT_GT(with_exits, 10);
}

namespace {

void check_invariants(const Simulator& sim, std::map<int, std::pair<int, double>>& last) {
  const auto& sc = sim.scenario();
  ASSERT_EQ(sim.spawned(), sim.vehicles().size() + sim.exited());
  std::map<int, std::vector<const Vehicle*>> lanes;
  for (const auto& v : sim.vehicles()) {
    ASSERT_GE(v.position, 0.0);
    ASSERT_LE(v.position, sc.segment_length);
    ASSERT_GE(v.lane, 1);
    ASSERT_LE(v.lane, sc.lanes);
    ASSERT_LE(kmh(v.speed), v.max_kmh(sc.car_max_kmh, sc.truck_max_kmh) + 1e-9);
    if (v.platoon) {
      ASSERT_TRUE(v.capable);
      const auto& m = sim.platoons().at(*v.platoon).members;
      ASSERT_EQ(std::count(m.begin(), m.end(), v.id), 1);
    }
    lanes[v.lane].push_back(&v);
  }
  std::size_t members = 0;
  for (const auto& [pid, p] : sim.platoons()) {
    for (int id : p.members) {
      const Vehicle* v = sim.vehicle(id);
      ASSERT_NE(v, nullptr);
      ASSERT_EQ(v->platoon, pid);
    }
    members += p.members.size();
  }
  std::size_t flagged = std::count_if(sim.vehicles().begin(), sim.vehicles().end(), [](const auto& v) { return v.platoon.has_value(); });
  ASSERT_EQ(members, flagged);  // nobody is in two platoons

  // Consecutive vehicles that stay in a lane keep their order.
  std::map<int, std::pair<int, double>> now;
  for (auto& [lane, vs] : lanes) {
    std::sort(vs.begin(), vs.end(), [](auto* a, auto* b) { return a->position < b->position; });
    for (std::size_t i = 0; i + 1 < vs.size(); ++i) {
      const Vehicle* a = vs[i];
      const Vehicle* b = vs[i + 1];
      auto pa = last.find(a->id), pb = last.find(b->id);
      if (pa != last.end() && pb != last.end() && pa->second.first == lane && pb->second.first == lane) {
        ASSERT_LE(pa->second.second, pb->second.second) << "vehicles " << a->id << " and " << b->id << " crossed in lane " << lane;
      }
    }
    for (const auto* v : vs) now[v->id] = {lane, v->position};
  }
  last = std::move(now);
}

}  // namespace

class SimulatorInvariants : public ::testing::TestWithParam<std::tuple<Strategy, std::uint64_t>> {};

TEST_P(SimulatorInvariants, HoldAtEveryStep) {
  auto [strategy, seed] = GetParam();
  Scenario s;
  s.hours = 1.0;
  s.profile = SpawnProfile::preset("weekday", 1.0);
  // Start in the morning peak.
  for (auto& [h, r] : s.profile.points) h -= 6.5;
  Simulator sim(s, seed);
  StrategyParams p;
  p.advertising_duration = 2;
  sim.configure(strategy, p);
  Preprocessor pre;
  std::map<int, std::pair<int, double>> last;
  for (std::size_t w = 0; w < s.observations(); ++w) {
    std::vector<RawMonitoringRecord> raw;
    for (int i = 0; i < 60; ++i) {
      raw.push_back(sim.step());
      check_invariants(sim, last);
      if (::testing::Test::HasFatalFailure()) return;
    }
    auto obs = pre(raw, s.observation_window, {std::string(to_string(strategy)), {}});
    for (const auto& [k, v] : obs.metrics) {
      ASSERT_GE(v, 0.0) << k;
      ASSERT_LE(v, 1.0) << k;
    }
  }
  EXPECT_GT(sim.counters().joins_completed, 0u);
}

INSTANTIATE_TEST_SUITE_P(Seeds, SimulatorInvariants,
                         ::testing::Combine(::testing::Values(Strategy::BestDistance, Strategy::BestVelocity, Strategy::BestDistanceAndLane),
                                            ::testing::Values(1u, 2u)));

TEST(Metrics, NoPlatooningCapableVehiclesMeansZeroPlatoonMetrics) {
  Scenario s;
  s.hours = 2.0;
  s.platooning_share = 0.0;
  Simulator sim(s, 3);
  sim.configure(Strategy::BestVelocity, no_wait());
  Preprocessor pre;
  for (std::size_t w = 0; w < s.observations(); ++w) {
    std::vector<RawMonitoringRecord> raw;
    for (int i = 0; i < 60; ++i) raw.push_back(sim.step());
    auto obs = pre(raw, s.observation_window, {"BestVelocity", {}});
    ASSERT_EQ(obs.metrics.at("platoon_utilization"), 0.0);
    ASSERT_EQ(obs.metrics.at("platoon_time"), 0.0);
  }
  EXPECT_TRUE(sim.platoons().empty());
}

TEST(Simulator, SameSeedSameTrace) {
  Scenario s;
  s.hours = 0.5;
  Simulator a(s, 11), b(s, 11), c(s, 12);
  bool differs = false;
  for (int i = 0; i < 3600; ++i) {
    auto ra = a.step();
    auto rb = b.step();
    auto rc = c.step();
    ASSERT_EQ(ra.vehicle_count, rb.vehicle_count);
    ASSERT_EQ(ra.car_speed_sum_kmh, rb.car_speed_sum_kmh);
    ASSERT_EQ(ra.capable_platooned, rb.capable_platooned);
    differs = differs || ra.vehicle_count != rc.vehicle_count || ra.car_speed_sum_kmh != rc.car_speed_sum_kmh;
  }
  EXPECT_TRUE(differs);
}
