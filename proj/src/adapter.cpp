#include "saopt/adapter.hpp"

#include <algorithm>

namespace saopt {

using platoon::RawMonitoringRecord;

namespace {

double unit(double x) { return std::clamp(x, 0.0, 1.0); }

std::vector<const RawMonitoringRecord*> in_window(const std::vector<RawMonitoringRecord>& raw, double window) {
  if (raw.empty()) throw EmptyWindow("no monitoring records");
  const double end = raw.back().timestamp;
  std::vector<const RawMonitoringRecord*> out;
  for (const auto& r : raw) {
    if (r.timestamp > end - window + 1e-9) out.push_back(&r);
  }
  if (out.empty()) throw EmptyWindow("window covers no record");
  return out;
}

bool empty_window(const std::vector<const RawMonitoringRecord*>& recs) {
  for (const auto* r : recs) {
    if (!r->exits.empty() || r->capable_on_road > 0) return false;
  }
  return true;
}

}  // namespace

Observation preprocess(const std::vector<RawMonitoringRecord>& raw, double window, const AdaptationDecision& input) {
  const auto recs = in_window(raw, window);
  const RawMonitoringRecord& last = *recs.back();

  int exited = 0, expected = 0, capable_exits = 0, cars = 0;
  double delay = 0.0, platooned_share = 0.0, speed_sum = 0.0;
  double capable_time = 0.0, platooned_time = 0.0;
  for (const auto* r : recs) {
    expected += r->expected_exits;
    for (const auto& t : r->exits) {
      ++exited;
      // Arriving early is not negative loss.
      delay += std::max(0.0, (t.travel_time - t.free_flow_time) / t.free_flow_time);
      if (t.capable) {
        ++capable_exits;
        platooned_share += t.travel_time > 0 ? t.platoon_time / t.travel_time : 0.0;
      }
    }
    cars += r->car_count;
    speed_sum += r->car_speed_sum_kmh;
    capable_time += r->dt * r->capable_on_road;
    platooned_time += r->dt * r->capable_platooned;
  }

  Observation o;
  o.timestamp = last.timestamp;
  o.input = input;
  o.context["vehicle_count"] = last.vehicle_count;
  o.context["avg_car_speed"] = cars > 0 ? speed_sum / cars : 0.0;

  double throughput = 0.0;
  if (expected > 0) throughput = static_cast<double>(exited) / expected;
  else if (exited > 0) throughput = 1.0;

  // Without finished trips the vehicles still on the road stand in.
  double time_loss = 0.0, platoon_time = 0.0;
  if (exited > 0) time_loss = 1.0 - delay / exited;
  else if (last.inflight_measured > 0) time_loss = 1.0 - last.inflight_delay_ratio_sum / last.inflight_measured;
  if (capable_exits > 0) platoon_time = platooned_share / capable_exits;
  else if (last.inflight_capable > 0) platoon_time = last.inflight_platoon_ratio_sum / last.inflight_capable;

  o.metrics["throughput"] = unit(throughput);
  o.metrics["time_loss"] = unit(time_loss);
  o.metrics["platoon_utilization"] = capable_time > 0 ? unit(platooned_time / capable_time) : 0.0;
  o.metrics["platoon_time"] = unit(platoon_time);
  return o;
}

Observation Preprocessor::operator()(const std::vector<RawMonitoringRecord>& raw, double window, const AdaptationDecision& input) {
  Observation o = preprocess(raw, window, input);
  const auto recs = in_window(raw, window);
  if (previous_ && empty_window(recs)) {
    o.metrics = *previous_;
    return o;
  }
  std::pair<int, int> trips{0, 0};
  for (const auto* r : recs) {
    trips.first += static_cast<int>(r->exits.size());
    trips.second += r->expected_exits;
  }
  trips_.push_back(trips);
  if (trips_.size() > horizon_) trips_.pop_front();
  int exited = 0, expected = 0;
  for (const auto& [x, e] : trips_) {
    exited += x;
    expected += e;
  }
  if (expected > 0) o.metrics["throughput"] = unit(static_cast<double>(exited) / expected);
  previous_ = o.metrics;
  return o;
}

bool PlatoonExecutor::execute(const AdaptationDecision& decision) {
  auto strategy = platoon::strategy_from_string(decision.strategy);
  if (!strategy) throw platoon::UnknownStrategy("unknown strategy '" + decision.strategy + "'");
  if (has_active_ && decision == active_) return false;
  sim_.configure(*strategy, platoon::params_from(decision.parameters));
  active_ = decision;
  has_active_ = true;
  return true;
}

// ---------------------------------------------------------------- service

AdaptationService::AdaptationService(std::unique_ptr<Coordinator> coordinator, bool async)
    : coordinator_(std::move(coordinator)), ddm_(coordinator_->store().ddm()), async_(async) {
  std::atomic_store(&snapshot_, std::make_shared<const AdaptationSnapshot>(AdaptationSnapshot{0, coordinator_->model().current_decision}));
  if (async_) thread_ = std::thread([this] { worker(); });
}

AdaptationService::~AdaptationService() { stop(); }

void AdaptationService::stop() {
  {
    std::lock_guard lock(queue_mutex_);
    if (stopping_) return;
    stopping_ = true;
  }
  queue_cv_.notify_all();
  if (thread_.joinable()) thread_.join();
}

IngestAck AdaptationService::ingest(const Observation& obs) {
  IngestAck ack;
  ack.errors = observation_errors(obs, ddm_);
  if (!ack.errors.empty()) return ack;
  ack.accepted = true;
  if (!async_) {
    std::lock_guard loop(loop_mutex_);
    {
      std::lock_guard lock(queue_mutex_);
      ++received_;
    }
    process(obs);
    return ack;
  }
  {
    std::lock_guard lock(queue_mutex_);
    ++received_;
    queue_.push_back(obs);
  }
  queue_cv_.notify_one();
  return ack;
}

void AdaptationService::process(const Observation& obs) {
  auto d = coordinator_->on_observation(obs);
  if (d) std::atomic_store(&snapshot_, std::make_shared<const AdaptationSnapshot>(AdaptationSnapshot{d->seq, d->decision}));
  {
    std::lock_guard lock(queue_mutex_);
    ++processed_;
  }
  done_cv_.notify_all();
}

void AdaptationService::worker() {
  for (;;) {
    Observation obs;
    {
      std::unique_lock lock(queue_mutex_);
      queue_cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (queue_.empty()) return;
      obs = std::move(queue_.front());
      queue_.pop_front();
    }
    std::lock_guard loop(loop_mutex_);
    process(obs);
  }
}

AdaptationSnapshot AdaptationService::latest() const { return *std::atomic_load(&snapshot_); }

HealthStatus AdaptationService::health() const {
  std::lock_guard lock(queue_mutex_);
  return {received_, processed_, latest().seq, !stopping_};
}

bool AdaptationService::wait_processed(std::size_t count, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(queue_mutex_);
  return done_cv_.wait_for(lock, timeout, [&] { return processed_ >= count; });
}

}  // namespace saopt
