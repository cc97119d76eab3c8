#include <gtest/gtest.h>

#include <bit>
#include <random>

#include "saopt/stratsel.hpp"

using namespace saopt;

namespace {

const std::vector<std::string> kOrder{"BestDistance", "BestVelocity", "BestDistanceAndLane"};

StrategySelectionSettings hv_settings() {
  StrategySelectionSettings s;
  s.observations_between_adaptations = 1;
  s.min_optimization_attempts = 10;
  s.window_size = 5;
  s.threshold_exceeds = 3;
  s.method = TriggerMethod::Hypervolume;
  s.hypervolume_threshold = 0.3;
  return s;
}

MeasureSpecs platoon_measures() {
  MeasureSpecs m;
  m["throughput"] = {"throughput", DataType::Double, true, -0.1, 0.5};
  m["time_loss"] = {"time_loss", DataType::Double, true, -0.1, 0.9};
  m["platoon_utilization"] = {"platoon_utilization", DataType::Double, true, -0.1, 0.62};
  m["platoon_time"] = {"platoon_time", DataType::Double, true, -0.1, 0.3};
  return m;
}

EnrichedObservation with_hv(double hv, const std::string& strategy = "BestDistance") {
  EnrichedObservation e;
  e.hypervolume = hv;
  e.base.input.strategy = strategy;
  return e;
}

EnrichedObservation with_metrics(double tp, double tl, double pu, double pt) {
  EnrichedObservation e;
  e.base.metrics = {{"throughput", tp}, {"time_loss", tl}, {"platoon_utilization", pu}, {"platoon_time", pt}};
  return e;
}

SelectionContext context(int attempts, std::vector<double> hvs) {
  SelectionContext ctx;
  ctx.current_strategy = "BestDistance";
  ctx.attempts_done = attempts;
  for (double v : hvs) ctx.window.push_back(with_hv(v));
  ctx.tried = {"BestDistance"};
  ctx.history = ctx.window;
  ctx.settings = hv_settings();
  ctx.measures = platoon_measures();
  return ctx;
}

}  // namespace

TEST(Select, TooFewAttemptsKeepsStrategy) {
  EXPECT_EQ(select_strategy(context(3, {0, 0, 0, 0, 0}), kOrder), "BestDistance");
}

TEST(Select, SwitchesToFirstUntried) {
  EXPECT_EQ(select_strategy(context(10, {0.25, 0.31, 0.20, 0.29, 0.35}), kOrder), "BestVelocity");
  auto ctx = context(10, {0.25, 0.31, 0.20, 0.29, 0.35});
  ctx.tried = {"BestDistance", "BestVelocity"};
  EXPECT_EQ(select_strategy(ctx, kOrder), "BestDistanceAndLane");
}

TEST(Select, AllTriedPicksBestHistoricalMean) {
  auto ctx = context(12, {0.1, 0.1, 0.1, 0.1, 0.1});
  ctx.tried = {kOrder.begin(), kOrder.end()};
  ctx.history.clear();
  for (double v : {0.41, 0.41}) ctx.history.push_back(with_hv(v, "BestDistance"));
  for (double v : {0.50, 0.60}) ctx.history.push_back(with_hv(v, "BestVelocity"));
  for (double v : {0.38}) ctx.history.push_back(with_hv(v, "BestDistanceAndLane"));
  EXPECT_EQ(select_strategy(ctx, kOrder), "BestVelocity");
}

TEST(Select, UnderfullWindowNeverSwitches) { EXPECT_EQ(select_strategy(context(50, {0, 0, 0, 0}), kOrder), "BestDistance"); }

TEST(Select, Errors) {
  EXPECT_THROW(select_strategy(context(1, {}), {}), SelectionError);
  auto ctx = context(1, {});
  ctx.current_strategy = "Other";
  EXPECT_THROW(select_strategy(ctx, kOrder), SelectionError);
}

TEST(Violations, HypervolumeMethod) {
  auto s = hv_settings();
  EXPECT_EQ(count_violations({with_hv(0.5), with_hv(0.5), with_hv(0.5)}, s, platoon_measures()), 0u);
  EXPECT_EQ(count_violations({with_hv(0.3), with_hv(0.2999)}, s, platoon_measures()), 1u);
  s.hypervolume_threshold.reset();
  EXPECT_THROW(count_violations({with_hv(0.5)}, s, platoon_measures()), SelectionError);
}

TEST(Violations, ThresholdMethod) {
  auto s = hv_settings();
  s.method = TriggerMethod::Threshold;
  auto m = platoon_measures();
  EXPECT_EQ(count_violations({with_metrics(0.99, 0.91, 0.60, 0.50)}, s, m), 1u);
  EXPECT_EQ(count_violations({with_metrics(0.5, 0.9, 0.62, 0.3)}, s, m), 0u);
  EXPECT_EQ(count_violations({with_metrics(0.1, 0.1, 0.1, 0.1)}, s, m), 1u);
  m["time_loss"].higher_is_better = false;
  EXPECT_EQ(count_violations({with_metrics(0.99, 0.95, 0.70, 0.50)}, s, m), 1u);
  m["throughput"].threshold_value.reset();
  EXPECT_THROW(count_violations({with_metrics(0.99, 0.95, 0.70, 0.50)}, s, m), SelectionError);
}

TEST(BestHistorical, Examples) {
  EXPECT_EQ(best_historical_strategy({with_hv(0.1, "BestVelocity")}, kOrder, 5), "BestVelocity");
  EXPECT_EQ(best_historical_strategy({with_hv(0.2, "BestDistance"), with_hv(0.4, "BestDistance"), with_hv(0.5, "BestVelocity")}, kOrder, 5),
            "BestVelocity");
  EXPECT_EQ(best_historical_strategy({with_hv(0.5, "BestDistanceAndLane"), with_hv(0.5, "BestVelocity")}, kOrder, 5), "BestVelocity");
  // only the most recent window_size observations count
  EXPECT_EQ(best_historical_strategy({with_hv(0.9, "BestDistance"), with_hv(0.1, "BestDistance"), with_hv(0.4, "BestVelocity")}, kOrder, 1),
            "BestVelocity");
  EXPECT_THROW(best_historical_strategy({}, kOrder, 5), SelectionError);
}

TEST(Select, AddingAViolationFreeObservationNeverCausesASwitch) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 0.6);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> hv(5);
    for (auto& v : hv) v = u(rng);
    std::vector<double> slid(hv.begin() + 1, hv.end());
    slid.push_back(0.45);
    bool before = switch_triggered(context(10, hv));
    bool after = switch_triggered(context(10, slid));
    EXPECT_TRUE(!after || before);
    auto ctx = context(10, slid);
    EXPECT_LE(count_violations(ctx.window, ctx.settings, ctx.measures), ctx.window.size());
  }
}

TEST(Select, ExhaustiveWindowPatterns) {
  for (int attempts = 0; attempts <= 12; ++attempts) {
    for (unsigned pattern = 0; pattern < 32; ++pattern) {
      std::vector<double> hv;
      for (unsigned i = 0; i < 5; ++i) hv.push_back((pattern >> i & 1u) ? 0.29 : 0.3);
      const bool expected = attempts >= 10 && std::popcount(pattern) >= 3;
      EXPECT_EQ(switch_triggered(context(attempts, hv)), expected) << attempts << " " << pattern;
    }
  }
}
