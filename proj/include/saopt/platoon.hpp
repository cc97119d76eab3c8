#pragma once

#include <cstdint>
#include <map>
#include <functional>
#include <optional>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "saopt/types.hpp"

namespace saopt::platoon {

constexpr double kmh(double ms) { return ms * 3.6; }
constexpr double ms(double kmh) { return kmh / 3.6; }

enum class VehicleKind { Car, Truck };

enum class Strategy { BestDistance, BestVelocity, BestDistanceAndLane };
std::string to_string(Strategy s);
std::optional<Strategy> strategy_from_string(const std::string& name);

class UnknownStrategy : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StrategyParams {
  double advertising_duration = 10;  // seconds
  double search_distance_front = 600;
  double search_distance_back = 250;
  double max_speed_difference = 35;  // km/h
  double speed_threshold_lane2 = 100;
  double speed_threshold_lane3 = 130;
  double speed_threshold_lane4 = 160;

  bool operator==(const StrategyParams&) const = default;
};

// Missing keys keep their defaults; unknown keys are ignored.
StrategyParams params_from(const ParameterSetting& setting);

// Best-Distance has no search distances of its own; it looks 250 m either way.
inline constexpr double kBestDistanceWindow = 250.0;
inline constexpr double kPlatoonGap = 10.0;
// Joins are abandoned after this long.
inline constexpr double kJoinTimeout = 180.0;
// Share of the timeout a target must be reachable in to be considered.
inline constexpr double kReachFraction = 0.5;
// Joiners change into the platoon's lane once this close to it.
inline constexpr double kMergeDistance = 40.0;
inline constexpr std::size_t kMaxPlatoonSize = 8;
// A member kept this far from its desired speed for this long leaves.
inline constexpr double kLeaveSpeedGap = 15.0;
inline constexpr double kLeavePatience = 30.0;

struct Vehicle {
  int id = 0;
  VehicleKind kind = VehicleKind::Car;
  double position = 0.0;  // m
  int lane = 1;           // 1 = rightmost
  double speed = 0.0;     // m/s
  double desired_kmh = 100.0;
  bool capable = false;
  std::optional<int> platoon;
  std::optional<int> joining;  // platoon being approached
  double join_started = 0.0;
  double advertising_since = 0.0;
  double spawn_time = 0.0;
  double platoon_time = 0.0;  // seconds spent in a platoon of >= 2
  std::optional<double> held_back_since;  // platoon cruise far from the desired speed
  std::optional<int> left_platoon;        // not considered again after leaving it

  double max_kmh(double car_max, double truck_max) const { return kind == VehicleKind::Car ? car_max : truck_max; }
};

struct Platoon {
  int id = 0;
  std::vector<int> members;  // leader first
  double cruise_kmh = 0.0;   // leader's desired speed
  int lane = 1;
};

// Piecewise-linear spawn rate over the scenario hours.
struct SpawnProfile {
  std::string name;
  std::vector<std::pair<double, double>> points;  // (hour, vehicles per hour), ascending hours

  double rate_per_hour(double seconds) const;
  static SpawnProfile preset(const std::string& name, double scale = 1.0);
};

struct Scenario {
  std::string name = "weekday";
  SpawnProfile profile = SpawnProfile::preset("weekday");
  std::uint64_t seed = 1;
  double hours = 14.0;
  double segment_length = 10000.0;
  int lanes = 4;
  double dt = 0.5;
  double observation_window = 30.0;
  double truck_share = 0.15;
  double platooning_share = 0.7;
  double car_max_kmh = 120.0;
  double truck_max_kmh = 80.0;
  double car_desired_mean = 100.0;
  double car_desired_sd = 15.0;
  double car_desired_min = 75.0;
  double truck_desired_mean = 80.0;
  double truck_desired_sd = 2.0;
  double truck_desired_min = 72.0;
  // Lone cars keep to lane 2, 3 or 4 by desired speed; trucks use lane 1.
  double lane3_from_kmh = 100.0;
  double lane4_from_kmh = 112.0;

  std::size_t observations() const { return static_cast<std::size_t>(hours * 3600.0 / observation_window + 0.5); }
};

Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& yaml_text);

struct TripRecord {
  double travel_time = 0.0;
  double free_flow_time = 0.0;
  double platoon_time = 0.0;
  bool capable = false;
};

// What the simulator reports after each step.
struct RawMonitoringRecord {
  double timestamp = 0.0;  // end of the step
  double dt = 0.0;
  int vehicle_count = 0;
  int car_count = 0;
  double car_speed_sum_kmh = 0.0;
  int capable_on_road = 0;
  int capable_platooned = 0;
  int expected_exits = 0;  // vehicles whose free-flow exit time fell in this step
  std::vector<TripRecord> exits;
  // Snapshot of the vehicles still on the road.
  int inflight_measured = 0;
  double inflight_delay_ratio_sum = 0.0;
  int inflight_capable = 0;
  double inflight_platoon_ratio_sum = 0.0;
};

struct SimCounters {
  std::size_t joins_started = 0;
  std::size_t joins_completed = 0;
  std::size_t joins_aborted = 0;
  std::size_t leaves = 0;
  double join_seconds = 0.0;  // summed over completed joins
};

class Simulator {
 public:
  explicit Simulator(Scenario scenario);
  Simulator(Scenario scenario, std::uint64_t seed);

  // Takes effect at the next step boundary.
  void configure(Strategy strategy, const StrategyParams& params);
  Strategy strategy() const { return strategy_; }
  const StrategyParams& params() const { return params_; }

  RawMonitoringRecord step();
  double time() const { return time_; }

  // Places a vehicle directly (tests, scripted scenes); returns its id.
  int add_vehicle(VehicleKind kind, double position, int lane, double speed_kmh, double desired_kmh, bool capable);
  // Forms a platoon from the given vehicles, front to back.
  int form_platoon(const std::vector<int>& ids);

  const std::vector<Vehicle>& vehicles() const { return vehicles_; }
  const Vehicle* vehicle(int id) const;
  const std::map<int, Platoon>& platoons() const { return platoons_; }
  std::size_t spawned() const { return spawned_; }
  std::size_t exited() const { return exited_; }
  std::size_t queued() const { return queue_.size(); }
  const SimCounters& counters() const { return counters_; }
  const Scenario& scenario() const { return scenario_; }

  // One coordination pass under the active strategy (also run by step).
  void coordinate();
  int preferred_lane(const Vehicle& v) const;
  int lane_for_cruise(double cruise_kmh) const;

 private:
  struct Pending {
    VehicleKind kind;
    double desired_kmh;
    bool capable;
    double spawn_time;
  };

  void spawn();
  void place_queued();
  void maneuver();
  void move();
  void finish_exits(RawMonitoringRecord& rec);
  void refresh_index();
  Vehicle& at(int id) { return vehicles_[index_.at(id)]; }
  bool lane_free(int lane, double from, double to, const std::vector<int>& ignore) const;
  void attach(Vehicle& joiner, Platoon& p, bool as_leader);
  void leave_platoon(Vehicle& v);
  void abort_join(Vehicle& v);
  void update_cruise(Platoon& p);
  bool in_platoon(const Vehicle& v) const;
  std::optional<int> choose_candidate(const Vehicle& v) const;

  Scenario scenario_;
  std::mt19937_64 rng_;
  Strategy strategy_ = Strategy::BestDistance;
  StrategyParams params_;
  std::optional<std::pair<Strategy, StrategyParams>> pending_config_;
  double time_ = 0.0;
  int next_vehicle_id_ = 1;
  int next_platoon_id_ = 1;
  std::vector<Vehicle> vehicles_;
  std::map<int, std::size_t> index_;
  std::map<int, Platoon> platoons_;
  std::vector<Pending> queue_;
  std::priority_queue<double, std::vector<double>, std::greater<>> free_flow_exits_;
  std::size_t spawned_ = 0;
  std::size_t exited_ = 0;
  SimCounters counters_;
};

}  // namespace saopt::platoon
