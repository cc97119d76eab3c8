#include "saopt/platoon.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace saopt::platoon {

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::BestDistance: return "BestDistance";
    case Strategy::BestVelocity: return "BestVelocity";
    case Strategy::BestDistanceAndLane: return "BestDistanceAndLane";
  }
  return "?";
}

std::optional<Strategy> strategy_from_string(const std::string& name) {
  if (name == "BestDistance") return Strategy::BestDistance;
  if (name == "BestVelocity") return Strategy::BestVelocity;
  if (name == "BestDistanceAndLane") return Strategy::BestDistanceAndLane;
  return std::nullopt;
}

StrategyParams params_from(const ParameterSetting& setting) {
  StrategyParams p;
  auto take = [&](const char* key, double& field) {
    if (auto it = setting.find(key); it != setting.end()) field = it->second;
  };
  take("advertising_duration", p.advertising_duration);
  take("search_distance_front", p.search_distance_front);
  take("search_distance_back", p.search_distance_back);
  take("max_speed_difference", p.max_speed_difference);
  take("speed_threshold_lane2", p.speed_threshold_lane2);
  take("speed_threshold_lane3", p.speed_threshold_lane3);
  take("speed_threshold_lane4", p.speed_threshold_lane4);
  return p;
}

// ---------------------------------------------------------------- scenario

double SpawnProfile::rate_per_hour(double seconds) const {
  if (points.empty()) return 0.0;
  const double h = seconds / 3600.0;
  if (h <= points.front().first) return points.front().second;
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (h <= points[i].first) {
      const auto [h0, r0] = points[i - 1];
      const auto [h1, r1] = points[i];
      return r0 + (r1 - r0) * (h - h0) / (h1 - h0);
    }
  }
  return points.back().second;
}

SpawnProfile SpawnProfile::preset(const std::string& name, double scale) {
  SpawnProfile p;
  p.name = name;
  if (name == "weekday") {
    // Morning rush and a second rise in the early afternoon.
    p.points = {{0, 90},   {3, 60},   {5, 160},  {6, 430},  {7, 600},   {8, 620},   {9, 470},
                {10, 380}, {11, 400}, {12, 450}, {13, 540}, {13.5, 580}, {14, 590}};
  } else if (name == "weekend") {
    p.points = {{0, 110}, {3, 60}, {6, 80}, {8, 150}, {10, 240}, {11.5, 290}, {12.5, 300}, {14, 270}};
  } else if (name == "empty") {
    p.points = {{0, 0}};
  } else {
    throw std::invalid_argument("unknown spawn profile '" + name + "'");
  }
  for (auto& [h, r] : p.points) r *= scale;
  return p;
}

Scenario parse_scenario(const std::string& yaml_text) {
  YAML::Node root = YAML::Load(yaml_text);
  if (!root.IsMap()) throw std::invalid_argument("scenario: expected a mapping");
  Scenario s;
  const std::set<std::string> known{"name",           "profile",           "seed",          "hours",           "segment_length",
                                    "lanes",          "dt",                "observation_window", "truck_share",  "platooning_share",
                                    "car_max_kmh",    "truck_max_kmh",     "car_desired_mean",   "car_desired_sd", "car_desired_min",
                                    "truck_desired_mean", "truck_desired_sd", "truck_desired_min", "lane3_from_kmh", "lane4_from_kmh"};
  for (const auto& kv : root) {
    const auto key = kv.first.as<std::string>();
    if (!known.count(key)) throw std::invalid_argument("scenario: unknown key '" + key + "'");
  }
  auto num = [&](const char* key, double& field) {
    if (root[key]) field = root[key].as<double>();
  };
  if (root["name"]) s.name = root["name"].as<std::string>();
  if (const auto prof = root["profile"]) {
    if (prof["points"]) {
      s.profile.name = prof["name"] ? prof["name"].as<std::string>() : s.name;
      s.profile.points.clear();
      for (const auto& pt : prof["points"]) s.profile.points.emplace_back(pt[0].as<double>(), pt[1].as<double>());
      if (prof["scale"]) {
        for (auto& [h, r] : s.profile.points) r *= prof["scale"].as<double>();
      }
    } else {
      s.profile = SpawnProfile::preset(prof["preset"].as<std::string>(), prof["scale"] ? prof["scale"].as<double>() : 1.0);
    }
  } else {
    s.profile = SpawnProfile::preset(s.name);
  }
  if (root["seed"]) s.seed = root["seed"].as<std::uint64_t>();
  if (root["lanes"]) s.lanes = root["lanes"].as<int>();
  num("hours", s.hours);
  num("segment_length", s.segment_length);
  num("dt", s.dt);
  num("observation_window", s.observation_window);
  num("truck_share", s.truck_share);
  num("platooning_share", s.platooning_share);
  num("car_max_kmh", s.car_max_kmh);
  num("truck_max_kmh", s.truck_max_kmh);
  num("car_desired_mean", s.car_desired_mean);
  num("car_desired_sd", s.car_desired_sd);
  num("car_desired_min", s.car_desired_min);
  num("truck_desired_mean", s.truck_desired_mean);
  num("truck_desired_sd", s.truck_desired_sd);
  num("truck_desired_min", s.truck_desired_min);
  num("lane3_from_kmh", s.lane3_from_kmh);
  num("lane4_from_kmh", s.lane4_from_kmh);
  if (s.dt <= 0 || s.hours <= 0 || s.segment_length <= 0 || s.lanes < 1 || s.observation_window < s.dt) {
    throw std::invalid_argument("scenario: non-positive geometry or timing");
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read scenario " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

// ---------------------------------------------------------------- simulator

Simulator::Simulator(Scenario scenario) : Simulator(scenario, scenario.seed) {}

Simulator::Simulator(Scenario scenario, std::uint64_t seed) : scenario_(std::move(scenario)), rng_(seed) {}

void Simulator::configure(Strategy strategy, const StrategyParams& params) { pending_config_ = {strategy, params}; }

const Vehicle* Simulator::vehicle(int id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &vehicles_[it->second];
}

void Simulator::refresh_index() {
  index_.clear();
  for (std::size_t i = 0; i < vehicles_.size(); ++i) index_[vehicles_[i].id] = i;
}

int Simulator::preferred_lane(const Vehicle& v) const {
  int lane = 1;
  if (v.kind == VehicleKind::Car) lane = v.desired_kmh < scenario_.lane3_from_kmh ? 2 : v.desired_kmh < scenario_.lane4_from_kmh ? 3 : 4;
  return std::min(lane, scenario_.lanes);
}

int Simulator::lane_for_cruise(double cruise) const {
  int lane = 1;
  if (cruise >= params_.speed_threshold_lane4) lane = 4;
  else if (cruise >= params_.speed_threshold_lane3) lane = 3;
  else if (cruise >= params_.speed_threshold_lane2) lane = 2;
  return std::min(lane, scenario_.lanes);
}

int Simulator::add_vehicle(VehicleKind kind, double position, int lane, double speed_kmh, double desired_kmh, bool capable) {
  Vehicle v;
  v.id = next_vehicle_id_++;
  v.kind = kind;
  v.position = position;
  v.lane = lane;
  v.speed = ms(speed_kmh);
  v.desired_kmh = desired_kmh;
  v.capable = capable;
  v.spawn_time = time_ - position / ms(desired_kmh);
  v.advertising_since = time_;
  vehicles_.push_back(v);
  index_[v.id] = vehicles_.size() - 1;
  ++spawned_;
  return v.id;
}

int Simulator::form_platoon(const std::vector<int>& ids) {
  Platoon p;
  p.id = next_platoon_id_++;
  p.members = ids;
  p.lane = at(ids.front()).lane;
  for (int id : ids) {
    Vehicle& v = at(id);
    v.platoon = p.id;
    v.lane = p.lane;
  }
  platoons_[p.id] = p;
  update_cruise(platoons_[p.id]);
  return p.id;
}

void Simulator::update_cruise(Platoon& p) { p.cruise_kmh = at(p.members.front()).desired_kmh; }

bool Simulator::in_platoon(const Vehicle& v) const {
  if (!v.platoon) return false;
  auto it = platoons_.find(*v.platoon);
  return it != platoons_.end() && it->second.members.size() >= 2;
}

bool Simulator::lane_free(int lane, double from, double to, const std::vector<int>& ignore) const {
  for (const auto& v : vehicles_) {
    if (v.lane != lane || v.position < from || v.position > to) continue;
    if (std::find(ignore.begin(), ignore.end(), v.id) == ignore.end()) return false;
  }
  return true;
}

void Simulator::spawn() {
  const double lambda = scenario_.profile.rate_per_hour(time_) / 3600.0 * scenario_.dt;
  if (lambda <= 0) return;
  const int n = std::poisson_distribution<int>(lambda)(rng_);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    Pending p;
    p.kind = u(rng_) < scenario_.truck_share ? VehicleKind::Truck : VehicleKind::Car;
    const bool car = p.kind == VehicleKind::Car;
    const double mean = car ? scenario_.car_desired_mean : scenario_.truck_desired_mean;
    const double sd = car ? scenario_.car_desired_sd : scenario_.truck_desired_sd;
    const double lo = car ? scenario_.car_desired_min : scenario_.truck_desired_min;
    const double hi = car ? scenario_.car_max_kmh : scenario_.truck_max_kmh;
    p.desired_kmh = std::clamp(std::normal_distribution<double>(mean, sd)(rng_), lo, hi);
    p.capable = u(rng_) < scenario_.platooning_share;
    p.spawn_time = time_ + u(rng_) * scenario_.dt;
    free_flow_exits_.push(p.spawn_time + scenario_.segment_length / ms(p.desired_kmh));
    queue_.push_back(p);
  }
}

void Simulator::place_queued() {
  std::vector<Pending> waiting;
  std::set<int> blocked;
  for (const auto& p : queue_) {
    Vehicle probe;
    probe.kind = p.kind;
    probe.desired_kmh = p.desired_kmh;
    const int lane = preferred_lane(probe);
    // Keep arrival order within a lane.
    if (blocked.count(lane)) {
      waiting.push_back(p);
      continue;
    }
    const Vehicle* rear = nullptr;
    for (const auto& v : vehicles_) {
      if (v.lane == lane && (!rear || v.position < rear->position)) rear = &v;
    }
    if (rear && rear->position < 30.0) {
      blocked.insert(lane);
      waiting.push_back(p);
      continue;
    }
    double speed = p.desired_kmh;
    if (rear && rear->position < 150.0) speed = std::min(speed, kmh(rear->speed));
    Vehicle v;
    v.id = next_vehicle_id_++;
    v.kind = p.kind;
    v.lane = lane;
    v.speed = ms(speed);
    v.desired_kmh = p.desired_kmh;
    v.capable = p.capable;
    v.spawn_time = p.spawn_time;
    v.advertising_since = time_;
    vehicles_.push_back(v);
    index_[v.id] = vehicles_.size() - 1;
    ++spawned_;
  }
  queue_ = std::move(waiting);
}

std::optional<int> Simulator::choose_candidate(const Vehicle& v) const {
  const bool by_velocity = strategy_ == Strategy::BestVelocity;
  const double front = by_velocity ? params_.search_distance_front : kBestDistanceWindow;
  const double back = by_velocity ? params_.search_distance_back : kBestDistanceWindow;

  std::map<int, std::size_t> incoming;
  for (const auto& u : vehicles_) {
    if (u.joining) ++incoming[*u.joining];
  }

  std::optional<int> best;
  double best_primary = 0.0, best_secondary = 0.0;
  std::set<int> seen_platoons;
  for (const auto& u : vehicles_) {
    if (u.id == v.id || !u.capable || u.joining || u.kind != v.kind) continue;  // cars and trucks platoon separately
    double cruise = u.desired_kmh;
    double distance = 0.0;
    int anchor = u.id;
    if (u.platoon) {
      if (v.left_platoon == u.platoon) continue;
      if (!seen_platoons.insert(*u.platoon).second) continue;
      const Platoon& p = platoons_.at(*u.platoon);
      if (p.members.size() + incoming[p.id] >= kMaxPlatoonSize) continue;
      cruise = p.cruise_kmh;
      // Nearest member decides the distance.
      double nearest = 1e18;
      for (int id : p.members) {
        const double d = vehicles_[index_.at(id)].position - v.position;
        if (std::abs(d) < std::abs(nearest)) nearest = d;
      }
      distance = nearest;
      anchor = p.members.front();
    } else {
      if (scenario_.segment_length - u.position < 1000.0) continue;
      distance = u.position - v.position;
    }
    if (distance > front || distance < -back) continue;
    // Skip targets the joiner cannot close on within the join timeout.
    const double closing = distance > 0.0
        ? std::min(v.max_kmh(scenario_.car_max_kmh, scenario_.truck_max_kmh), std::max(cruise + 15.0, v.desired_kmh)) - cruise
        : cruise - std::max(40.0, cruise - 20.0);
    if (closing <= 0.0 || std::abs(distance) / ms(closing) > kReachFraction * kJoinTimeout) continue;
    const double dv = std::abs(v.desired_kmh - cruise);
    double primary, secondary;
    if (by_velocity) {
      primary = dv;
      secondary = std::abs(distance);
    } else {
      if (dv > params_.max_speed_difference) continue;
      primary = std::abs(distance);
      secondary = dv;
    }
    if (!best || primary < best_primary || (primary == best_primary && secondary < best_secondary)) {
      best = anchor;
      best_primary = primary;
      best_secondary = secondary;
    }
  }
  return best;
}

void Simulator::coordinate() {
  for (std::size_t i = 0; i < vehicles_.size(); ++i) {
    Vehicle& v = vehicles_[i];
    if (!v.capable || v.platoon || v.joining) continue;
    if (scenario_.segment_length - v.position < 1000.0) continue;
    if (time_ - v.advertising_since < params_.advertising_duration) continue;
    v.advertising_since = time_;
    auto anchor = choose_candidate(v);
    if (!anchor) continue;
    Vehicle& u = at(*anchor);
    int pid;
    if (u.platoon) {
      pid = *u.platoon;
    } else {
      pid = form_platoon({u.id});
    }
    Vehicle& w = vehicles_[i];
    w.joining = pid;
    w.join_started = time_;
    ++counters_.joins_started;
  }
}

void Simulator::attach(Vehicle& joiner, Platoon& p, bool as_leader) {
  ++counters_.joins_completed;
  counters_.join_seconds += time_ - joiner.join_started;
  if (as_leader) {
    p.members.insert(p.members.begin(), joiner.id);
  } else {
    p.members.push_back(joiner.id);
  }
  joiner.platoon = p.id;
  joiner.joining.reset();
  joiner.lane = p.lane;
  update_cruise(p);
}

void Simulator::abort_join(Vehicle& v) {
  ++counters_.joins_aborted;
  const int pid = *v.joining;
  v.joining.reset();
  v.advertising_since = time_;
  auto it = platoons_.find(pid);
  if (it == platoons_.end() || it->second.members.size() != 1) return;
  for (const auto& u : vehicles_) {
    if (u.joining && *u.joining == pid) return;
  }
  Vehicle& anchor = at(it->second.members.front());
  anchor.platoon.reset();
  anchor.advertising_since = time_;
  platoons_.erase(it);
}

void Simulator::leave_platoon(Vehicle& v) {
  if (!v.platoon) return;
  auto it = platoons_.find(*v.platoon);
  v.platoon.reset();
  if (it == platoons_.end()) return;
  auto& m = it->second.members;
  m.erase(std::remove(m.begin(), m.end(), v.id), m.end());
  if (m.size() <= 1) {
    for (int id : m) {
      Vehicle& rest = at(id);
      rest.platoon.reset();
      rest.advertising_since = time_;
    }
    platoons_.erase(it);
    return;
  }
  update_cruise(it->second);
}

void Simulator::maneuver() {
  // Vehicles nearest per lane, ahead and behind, for the join checks.
  auto neighbour = [&](const Vehicle& v, bool ahead) -> const Vehicle* {
    const Vehicle* best = nullptr;
    for (const auto& u : vehicles_) {
      if (u.id == v.id || u.lane != v.lane) continue;
      if (ahead ? u.position >= v.position && (!best || u.position < best->position)
                : u.position <= v.position && (!best || u.position > best->position)) {
        best = &u;
      }
    }
    return best;
  };

  for (std::size_t i = 0; i < vehicles_.size(); ++i) {
    Vehicle& v = vehicles_[i];
    if (!v.joining) continue;
    auto it = platoons_.find(*v.joining);
    if (it == platoons_.end() || time_ - v.join_started > kJoinTimeout || scenario_.segment_length - v.position < 300.0) {
      if (it == platoons_.end()) {
        ++counters_.joins_aborted;
        v.joining.reset();
        v.advertising_since = time_;
      } else {
        abort_join(v);
      }
      continue;
    }
    Platoon& p = it->second;
    const Vehicle& leader = at(p.members.front());
    const Vehicle& tail = at(p.members.back());
    // Pass slower traffic in a neighbouring lane, merge once close to the platoon.
    auto overtake = [&] {
      const Vehicle* blocker = neighbour(v, true);
      if (!blocker || blocker->position - v.position > 60.0) return;
      for (int lane : {v.lane + 1, v.lane - 1}) {
        if (lane < 1 || lane > scenario_.lanes || lane == v.lane) continue;
        if (!lane_free(lane, v.position - 15.0, v.position + 60.0, {})) continue;
        v.lane = lane;
        return;
      }
    };
    if (v.position < tail.position) {
      const double gap = tail.position - v.position;
      if (v.lane == p.lane) {
        const Vehicle* ahead = neighbour(v, true);
        if (ahead && ahead->id == tail.id) {
          if (gap <= kPlatoonGap + 3.0) attach(v, p, false);
        } else {
          overtake();
        }
      } else if (gap <= kMergeDistance && lane_free(p.lane, v.position - 15.0, tail.position - 1.0, {})) {
        v.lane = p.lane;
      } else {
        overtake();
      }
    } else if (v.position > leader.position) {
      const double gap = v.position - leader.position;
      if (v.lane == p.lane) {
        const Vehicle* behind = neighbour(v, false);
        if (behind && behind->id == leader.id && gap <= kPlatoonGap + 3.0) attach(v, p, true);
      } else if (gap <= kMergeDistance && lane_free(p.lane, leader.position + 1.0, v.position + 15.0, {})) {
        v.lane = p.lane;
      }
    }
  }

  std::vector<int> leavers;
  for (auto& [pid, p] : platoons_) {
    if (p.members.size() < 2) continue;
    for (int id : p.members) {
      Vehicle& m = at(id);
      if (std::abs(m.desired_kmh - p.cruise_kmh) <= kLeaveSpeedGap) {
        m.held_back_since.reset();
      } else if (!m.held_back_since) {
        m.held_back_since = time_;
      } else if (time_ - *m.held_back_since >= kLeavePatience) {
        leavers.push_back(id);
      }
    }
  }
  for (int id : leavers) {
    Vehicle& m = at(id);
    ++counters_.leaves;
    m.left_platoon = m.platoon;
    leave_platoon(m);
    m.held_back_since.reset();
    m.advertising_since = time_;
  }

  for (auto& [pid, p] : platoons_) {
    if (p.members.size() < 2) continue;
    if (strategy_ != Strategy::BestDistanceAndLane) continue;
    const int target = lane_for_cruise(p.cruise_kmh);
    if (target == p.lane) continue;
    const double lo = at(p.members.back()).position - 12.0;
    const double hi = at(p.members.front()).position + 12.0;
    if (!lane_free(target, lo, hi, p.members)) continue;
    p.lane = target;
    for (int id : p.members) at(id).lane = target;
  }

  for (auto& v : vehicles_) {
    if (v.platoon || v.joining) continue;
    const int pref = preferred_lane(v);
    if (v.lane != pref && lane_free(pref, v.position - 15.0, v.position + 15.0, {})) v.lane = pref;
  }
}

void Simulator::move() {
  const double dt = scenario_.dt;
  std::vector<double> new_pos(vehicles_.size()), new_speed(vehicles_.size());
  std::vector<std::vector<std::size_t>> lanes(static_cast<std::size_t>(scenario_.lanes) + 1);
  for (std::size_t i = 0; i < vehicles_.size(); ++i) lanes[static_cast<std::size_t>(vehicles_[i].lane)].push_back(i);

  for (auto& lane : lanes) {
    std::sort(lane.begin(), lane.end(), [&](std::size_t a, std::size_t b) {
      if (vehicles_[a].position != vehicles_[b].position) return vehicles_[a].position > vehicles_[b].position;
      return vehicles_[a].id < vehicles_[b].id;
    });
    for (std::size_t k = 0; k < lane.size(); ++k) {
      const std::size_t i = lane[k];
      const Vehicle& v = vehicles_[i];
      const double vmax = ms(v.max_kmh(scenario_.car_max_kmh, scenario_.truck_max_kmh));
      const std::optional<std::size_t> ahead = k > 0 ? std::optional<std::size_t>(lane[k - 1]) : std::nullopt;

      double target = ms(v.desired_kmh);
      std::optional<int> linked;  // vehicle this one keeps the platoon gap to
      if (in_platoon(v)) {
        const Platoon& p = platoons_.at(*v.platoon);
        target = ms(p.cruise_kmh);
        auto pos = std::find(p.members.begin(), p.members.end(), v.id);
        if (pos != p.members.begin()) linked = *(pos - 1);
      } else if (v.joining && platoons_.count(*v.joining)) {
        const Platoon& p = platoons_.at(*v.joining);
        const Vehicle& tail = vehicles_[index_.at(p.members.back())];
        const Vehicle& leader = vehicles_[index_.at(p.members.front())];
        const double cruise = ms(p.cruise_kmh);
        if (v.position < tail.position) {
          const double gap = tail.position - v.position;
          if (v.lane == p.lane) {
            target = std::min(vmax, ms(std::max(p.cruise_kmh + 15.0, v.desired_kmh)));
            linked = tail.id;
          } else if (gap > kMergeDistance) {
            target = std::min(vmax, ms(std::max(p.cruise_kmh + 15.0, v.desired_kmh)));
          } else {
            target = cruise + 0.5 * (gap - 0.5 * kMergeDistance);  // hold beside the merge slot
          }
        } else if (v.position > leader.position) {
          const double gap = v.position - leader.position;
          target = v.lane == p.lane && gap <= kMergeDistance ? cruise : cruise - 0.5 * (gap - 0.5 * kMergeDistance);
          target = std::max({target, cruise - ms(20.0), ms(40.0)});
        } else {
          target = std::max(ms(40.0), cruise - ms(20.0));  // alongside: drop back
        }
        target = std::clamp(target, 0.0, vmax);
      }

      // A joiner merging in front of this platoon's leader is closed up on like a member.
      if (ahead && v.platoon && !linked) {
        const Vehicle& a = vehicles_[*ahead];
        const Platoon& p = platoons_.at(*v.platoon);
        if (a.joining && *a.joining == p.id && p.members.front() == v.id) linked = a.id;
      }
      if (ahead) {
        const double gap = vehicles_[*ahead].position - v.position;
        const double lead_speed = new_speed[*ahead];
        if (linked && vehicles_[*ahead].id == *linked) {
          const double follow = lead_speed + 0.5 * (gap - kPlatoonGap);
          target = v.joining ? std::min(target, follow) : follow;
          target = std::min(target, vmax);
        } else {
          const double desired_gap = 5.0 + 1.2 * v.speed;
          target = std::min(target, lead_speed + (gap - desired_gap) / 2.0);
        }
      }
      double speed = std::clamp(target, v.speed - 4.0 * dt, v.speed + 2.0 * dt);
      speed = std::max(0.0, speed);
      double pos = v.position + speed * dt;
      if (ahead && pos > new_pos[*ahead] - 2.0) {
        pos = std::max(v.position, new_pos[*ahead] - 2.0);
        speed = (pos - v.position) / dt;
      }
      new_pos[i] = pos;
      new_speed[i] = speed;
    }
  }
  for (std::size_t i = 0; i < vehicles_.size(); ++i) {
    vehicles_[i].position = new_pos[i];
    vehicles_[i].speed = new_speed[i];
  }
}

void Simulator::finish_exits(RawMonitoringRecord& rec) {
  std::vector<int> leaving;
  for (const auto& v : vehicles_) {
    if (v.position >= scenario_.segment_length) leaving.push_back(v.id);
  }
  for (int id : leaving) {
    Vehicle& v = at(id);
    if (v.joining) abort_join(v);
    leave_platoon(v);
    rec.exits.push_back({time_ - v.spawn_time, scenario_.segment_length / ms(v.desired_kmh), v.platoon_time, v.capable});
  }
  if (!leaving.empty()) {
    // Joiners whose target vanished with the leavers are reset by the next maneuver pass.
    std::vector<Vehicle> kept;
    kept.reserve(vehicles_.size());
    for (auto& v : vehicles_) {
      if (v.position < scenario_.segment_length) kept.push_back(std::move(v));
    }
    vehicles_ = std::move(kept);
    exited_ += leaving.size();
    refresh_index();
  }
}

RawMonitoringRecord Simulator::step() {
  if (pending_config_) {
    strategy_ = pending_config_->first;
    params_ = pending_config_->second;
    pending_config_.reset();
  }
  spawn();
  place_queued();
  coordinate();
  maneuver();
  move();
  time_ += scenario_.dt;
  for (auto& v : vehicles_) {
    if (in_platoon(v)) v.platoon_time += scenario_.dt;
  }

  RawMonitoringRecord rec;
  rec.timestamp = time_;
  rec.dt = scenario_.dt;
  finish_exits(rec);
  while (!free_flow_exits_.empty() && free_flow_exits_.top() <= time_) {
    free_flow_exits_.pop();
    ++rec.expected_exits;
  }
  for (const auto& v : vehicles_) {
    ++rec.vehicle_count;
    if (v.kind == VehicleKind::Car) {
      ++rec.car_count;
      rec.car_speed_sum_kmh += kmh(v.speed);
    }
    if (v.capable) {
      ++rec.capable_on_road;
      if (in_platoon(v)) ++rec.capable_platooned;
    }
    const double elapsed = time_ - v.spawn_time;
    if (v.position > 200.0 && elapsed > 0) {
      const double ff = v.position / ms(v.desired_kmh);
      ++rec.inflight_measured;
      rec.inflight_delay_ratio_sum += std::max(0.0, (elapsed - ff) / ff);
      if (v.capable) {
        ++rec.inflight_capable;
        rec.inflight_platoon_ratio_sum += v.platoon_time / elapsed;
      }
    }
  }
  return rec;
}

}  // namespace saopt::platoon
