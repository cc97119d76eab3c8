#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "saopt/coord.hpp"
#include "saopt/platoon.hpp"

namespace saopt {

class EmptyWindow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Aggregates the records of the last `window` seconds into one observation:
// context (vehicle_count, avg_car_speed) and the four platoon metrics, each
// clamped to [0, 1]. `input` is the configuration that was active.
Observation preprocess(const std::vector<platoon::RawMonitoringRecord>& raw, double window, const AdaptationDecision& input);

// Stateful preprocess for a stream of windows. Throughput is taken over the
// last `throughput_windows` windows, since a single window holds only a
// handful of trips. A window with no finished trip and no platooning-capable
// vehicle on the road repeats the previous metrics.
class Preprocessor {
 public:
  explicit Preprocessor(std::size_t throughput_windows = 10) : horizon_(throughput_windows) {}
  Observation operator()(const std::vector<platoon::RawMonitoringRecord>& raw, double window, const AdaptationDecision& input);

 private:
  std::size_t horizon_;
  std::deque<std::pair<int, int>> trips_;  // (exited, expected) per window
  std::optional<ValueMap> previous_;
};

// Turns decisions into simulator commands.
class PlatoonExecutor {
 public:
  explicit PlatoonExecutor(platoon::Simulator& sim) : sim_(sim) {}
  // Throws platoon::UnknownStrategy and keeps the previous configuration.
  // Returns false when the decision equals the active configuration.
  bool execute(const AdaptationDecision& decision);
  const AdaptationDecision& active() const { return active_; }

 private:
  platoon::Simulator& sim_;
  AdaptationDecision active_;
  bool has_active_ = false;
};

struct IngestAck {
  bool accepted = false;
  std::vector<std::string> errors;
};

struct AdaptationSnapshot {
  std::size_t seq = 0;
  AdaptationDecision decision;
};

struct HealthStatus {
  std::size_t received = 0;
  std::size_t processed = 0;
  std::size_t decisions = 0;
  bool running = false;
};

// Framework side of the adapter: validates observations, feeds them to the
// coordinator in arrival order and publishes the newest decision.
class AdaptationService {
 public:
  // async: a worker thread drains the queue; otherwise ingest processes inline.
  AdaptationService(std::unique_ptr<Coordinator> coordinator, bool async);
  ~AdaptationService();
  AdaptationService(const AdaptationService&) = delete;
  AdaptationService& operator=(const AdaptationService&) = delete;

  IngestAck ingest(const Observation& obs);
  AdaptationSnapshot latest() const;
  HealthStatus health() const;
  // Blocks until at least `count` observations went through the loop.
  bool wait_processed(std::size_t count, std::chrono::milliseconds timeout) const;

  // Only valid while no ingestion is in flight.
  const Coordinator& coordinator() const { return *coordinator_; }
  void stop();

 private:
  void process(const Observation& obs);
  void worker();

  std::unique_ptr<Coordinator> coordinator_;
  DomainDataModel ddm_;
  bool async_;
  std::shared_ptr<const AdaptationSnapshot> snapshot_;
  mutable std::mutex queue_mutex_;
  mutable std::condition_variable queue_cv_;
  mutable std::condition_variable done_cv_;
  std::deque<Observation> queue_;
  std::size_t received_ = 0;
  std::size_t processed_ = 0;
  bool stopping_ = false;
  std::mutex loop_mutex_;
  std::thread thread_;
};

}  // namespace saopt
