#pragma once

#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "saopt/ddm.hpp"
#include "saopt/types.hpp"

namespace saopt {

class SelectionError : public std::runtime_error {
 public:
  enum class Kind { EmptyOrder, MissingThreshold, NoHistory, UnknownStrategy };
  SelectionError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

struct SelectionContext {
  std::string current_strategy;
  int attempts_done = 0;                          // optimization attempts for (situation, current_strategy)
  std::vector<EnrichedObservation> window;        // last <= window_size observations of the situation
  std::set<std::string> tried;                    // strategies already executed in the situation
  std::vector<EnrichedObservation> history;       // all observations of the situation
  StrategySelectionSettings settings;
  MeasureSpecs measures;
};

// Observations whose performance is strictly worse than the configured threshold(s).
std::size_t count_violations(const std::vector<EnrichedObservation>& window, const StrategySelectionSettings& settings,
                             const MeasureSpecs& measures);

// Strategy with the highest mean hypervolume over its most recent window_size
// observations; ties go to the earlier strategy in `order`.
std::string best_historical_strategy(const std::vector<EnrichedObservation>& history, const std::vector<std::string>& order,
                                     int window_size);

// True when the active strategy is declared under-performing.
bool switch_triggered(const SelectionContext& ctx);

std::string select_strategy(const SelectionContext& ctx, const std::vector<std::string>& order);

}  // namespace saopt
