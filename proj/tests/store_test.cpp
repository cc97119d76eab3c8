#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "saopt/store.hpp"

using namespace saopt;

namespace {

DomainDataModel platoon_ddm() { return load_ddm(std::string(SAOPT_CONFIG_DIR) + "/platoon_ddm.yaml"); }

MeasureSpecs listing_specs() {
  MeasureSpecs specs;
  specs["pm1"] = {"pm1", DataType::Int, true, -1.0, std::nullopt};
  specs["pm2"] = {"pm2", DataType::Double, false, 100.0, std::nullopt};
  return specs;
}

Observation obs_at(double t, const std::string& strategy, ValueMap params, double hv_scale = 0.5) {
  Observation o;
  o.timestamp = t;
  o.context = {{"vehicle_count", 30}, {"avg_car_speed", 101.5}};
  o.input = {strategy, std::move(params)};
  o.metrics = {{"throughput", 0.9}, {"time_loss", 0.9}, {"platoon_utilization", hv_scale}, {"platoon_time", 0.4}};
  return o;
}

const ValueMap kBv{{"advertising_duration", 10}, {"search_distance_front", 600}, {"search_distance_back", 250}};
const ValueMap kBd{{"advertising_duration", 10}, {"max_speed_difference", 35}};

}  // namespace

TEST(Hypervolume, PlatoonRow) {
  auto ddm = platoon_ddm();
  ValueMap m{{"throughput", 0.9952}, {"time_loss", 0.8992}, {"platoon_utilization", 0.6251}, {"platoon_time", 0.4908}};
  // Independent route: exp of summed log gaps.
  double oracle = std::exp(std::log(1.0952) + std::log(0.9992) + std::log(0.7251) + std::log(0.5908));
  EXPECT_NEAR(compute_hypervolume(m, ddm.performance_measures), 0.4687963830396672, 1e-9);
  EXPECT_NEAR(compute_hypervolume(m, ddm.performance_measures), oracle, 1e-9);
}

TEST(Hypervolume, ListingMeasures) {
  EXPECT_NEAR(compute_hypervolume({{"pm1", 5}, {"pm2", 20.0}}, listing_specs()), 480.0, 1e-9);
  EXPECT_EQ(compute_hypervolume({{"pm1", -1}, {"pm2", 20.0}}, listing_specs()), 0.0);
  EXPECT_EQ(compute_hypervolume({{"pm1", 5}, {"pm2", 100.0}}, listing_specs()), 0.0);
}

TEST(Hypervolume, Errors) {
  EXPECT_THROW(compute_hypervolume({{"pm1", 5}}, listing_specs()), StoreError);
  EXPECT_THROW(compute_hypervolume({{"pm1", 5}, {"pmX", 1}}, listing_specs()), StoreError);
  EXPECT_THROW(compute_hypervolume({{"pm1", 5}, {"pm2", NAN}}, listing_specs()), StoreError);
}

TEST(Hypervolume, ZeroIffDominatedAndLinearInEachGap) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2, 2);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 1000; ++trial) {
    MeasureSpecs specs;
    ValueMap m;
    int dims = 1 + trial % 5;
    bool any_dominated = false;
    double product = 1.0;
    for (int d = 0; d < dims; ++d) {
      std::string name = "m" + std::to_string(d);
      bool hib = coin(rng);
      double ref = u(rng);
      double v = (trial % 7 == 0 && d == 0) ? ref : u(rng);
      specs[name] = {name, DataType::Double, hib, ref, std::nullopt};
      m[name] = v;
      double gap = hib ? v - ref : ref - v;
      any_dominated = any_dominated || gap <= 0;
      product *= gap;
    }
    double hv = compute_hypervolume(m, specs);
    EXPECT_EQ(hv == 0.0, any_dominated);
    if (!any_dominated) {
      EXPECT_NEAR(hv, product, 1e-12 * std::max(1.0, product));
      auto scaled = m;
      const auto& s = specs.at("m0");
      double c = 1.0 + std::uniform_real_distribution<double>(0.01, 3)(rng);
      double gap = s.higher_is_better ? m["m0"] - s.reference_value : s.reference_value - m["m0"];
      scaled["m0"] = s.higher_is_better ? s.reference_value + c * gap : s.reference_value - c * gap;
      EXPECT_NEAR(compute_hypervolume(scaled, specs), c * hv, 1e-9 * std::max(1.0, c * hv));
    }
  }
}

TEST(Store, IngestEnrichment) {
  ObservationStore store(platoon_ddm());
  auto first = store.ingest(obs_at(0, "BestVelocity", kBv));
  EXPECT_EQ(first.config_active_for, 0);
  EXPECT_EQ(first.situation, kNoise);
  auto second = store.ingest(obs_at(30, "BestVelocity", kBv));
  EXPECT_EQ(second.config_active_for, 30);
  auto changed = kBv;
  changed["search_distance_front"] = 700;
  auto third = store.ingest(obs_at(60, "BestVelocity", changed));
  EXPECT_EQ(third.config_active_for, 0);
  EXPECT_EQ(store.ingest(obs_at(90, "BestVelocity", changed)).config_active_for, 30);
  EXPECT_EQ(store.ingest(obs_at(120, "BestDistance", kBd)).config_active_for, 0);
  EXPECT_THROW(store.ingest(obs_at(100, "BestDistance", kBd)), StoreError);
}

TEST(Store, SchemaViolations) {
  ObservationStore store(platoon_ddm());
  auto missing_metric = obs_at(0, "BestVelocity", kBv);
  missing_metric.metrics.erase("platoon_time");
  try {
    store.ingest(missing_metric);
    FAIL();
  } catch (const StoreError& e) {
    EXPECT_EQ(e.kind(), StoreError::Kind::SchemaViolation);
    EXPECT_NE(std::string(e.what()).find("platoon_time"), std::string::npos);
  }
  auto fractional = obs_at(0, "BestVelocity", kBv);
  fractional.context["vehicle_count"] = 3.5;
  EXPECT_THROW(store.ingest(fractional), StoreError);
  auto wrong_params = obs_at(0, "BestVelocity", kBd);
  EXPECT_THROW(store.ingest(wrong_params), StoreError);
  EXPECT_EQ(store.size(), 0u);
}

TEST(Store, QueryAndRelabel) {
  ObservationStore store(platoon_ddm());
  const char* strategies[] = {"BestVelocity", "BestDistance", "BestVelocity", "BestVelocity"};
  for (int i = 0; i < 4; ++i) store.ingest(obs_at(30.0 * i, strategies[i], std::string(strategies[i]) == "BestVelocity" ? kBv : kBd));
  store.assign_situations({2, 2, 1, 2});
  auto rows = store.query({2, "BestVelocity", std::nullopt});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].base.timestamp, 0);
  EXPECT_EQ(rows[1].base.timestamp, 90);
  EXPECT_EQ(store.query({std::nullopt, std::nullopt, 5}).size(), 4u);
  EXPECT_EQ(store.query({std::nullopt, std::nullopt, 2}).front().base.timestamp, 60);
  EXPECT_EQ(store.query().size(), 4u);

  EXPECT_EQ(store.relabel({}), 0u);
  EXPECT_EQ(store.relabel({{1, 1}, {2, 2}}), 0u);
  EXPECT_EQ(store.relabel({{1, 0}, {2, 1}}), 4u);
  EXPECT_EQ(store.query({1, std::nullopt, std::nullopt}).size(), 3u);
  // query after relabel equals relabelled query
  EXPECT_EQ(store.query({1, "BestVelocity", std::nullopt}).size(), 2u);
}

TEST(Store, RelabelExamples) {
  ObservationStore store(platoon_ddm());
  for (int i = 0; i < 3; ++i) store.ingest(obs_at(30.0 * i, "BestVelocity", kBv));
  store.assign_situations({0, 0, 1});
  EXPECT_EQ(store.relabel({{1, 2}}), 1u);
  EXPECT_EQ(store.at(2).situation, 2);
  ObservationStore swap(platoon_ddm());
  for (int i = 0; i < 2; ++i) swap.ingest(obs_at(30.0 * i, "BestVelocity", kBv));
  swap.assign_situations({0, 1});
  EXPECT_EQ(swap.relabel({{0, 1}, {1, 0}}), 2u);
  EXPECT_EQ(swap.at(0).situation, 1);
  EXPECT_EQ(swap.at(1).situation, 0);
}

TEST(Store, LogReplayRecomputesHypervolume) {
  auto dir = std::filesystem::temp_directory_path() / "saopt_store_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  auto ddm = platoon_ddm();
  {
    ObservationStore store(ddm);
    store.open_log(dir / "obs.jsonl");
    for (int i = 0; i < 5; ++i) store.ingest(obs_at(30.0 * i, "BestVelocity", kBv, 0.1 * i));
  }
  auto replay = ObservationStore::read_log(dir / "obs.jsonl");
  ASSERT_EQ(replay.size(), 5u);
  ddm.performance_measures["platoon_utilization"].reference_value = -0.2;
  ObservationStore store(ddm);
  for (const auto& o : replay) store.ingest(o);
  EXPECT_NEAR(store.at(3).hypervolume, 1.0 * 1.0 * 0.5 * 0.5, 1e-12);
  store.export_csv(dir / "obs.csv");
  std::ifstream in(dir / "obs.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header.rfind("timestamp,vehicle_count,avg_car_speed,strategy,", 0), 0u);
}

TEST(Store, ToleratesLargeVolumes) {
  ObservationStore store(platoon_ddm());
  for (int i = 0; i < 100000; ++i) store.ingest(obs_at(i, "BestVelocity", kBv));
  EXPECT_EQ(store.size(), 100000u);
  EXPECT_EQ(store.query({std::nullopt, std::nullopt, 10}).size(), 10u);
}
