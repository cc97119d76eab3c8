#include "saopt/stratsel.hpp"

#include <algorithm>
#include <map>

namespace saopt {

std::size_t count_violations(const std::vector<EnrichedObservation>& window, const StrategySelectionSettings& settings,
                             const MeasureSpecs& measures) {
  std::size_t violations = 0;
  if (settings.method == TriggerMethod::Hypervolume) {
    if (!settings.hypervolume_threshold) throw SelectionError(SelectionError::Kind::MissingThreshold, "hypervolume_threshold not set");
    for (const auto& o : window) violations += o.hypervolume < *settings.hypervolume_threshold;
    return violations;
  }
  for (const auto& o : window) {
    bool violated = false;
    for (const auto& [name, spec] : measures) {
      if (!spec.threshold_value) throw SelectionError(SelectionError::Kind::MissingThreshold, "threshold_value of '" + name + "' not set");
      double v = o.base.metrics.at(name);
      violated = violated || (spec.higher_is_better ? v < *spec.threshold_value : v > *spec.threshold_value);
    }
    violations += violated;
  }
  return violations;
}

std::string best_historical_strategy(const std::vector<EnrichedObservation>& history, const std::vector<std::string>& order,
                                     int window_size) {
  std::map<std::string, std::vector<double>> per_strategy;
  for (const auto& o : history) per_strategy[o.base.input.strategy].push_back(o.hypervolume);
  const std::string* best = nullptr;
  double best_mean = 0.0;
  for (const auto& s : order) {
    auto it = per_strategy.find(s);
    if (it == per_strategy.end()) continue;
    const auto& hv = it->second;
    auto n = std::min<std::size_t>(hv.size(), static_cast<std::size_t>(std::max(1, window_size)));
    double sum = 0.0;
    for (auto i = hv.size() - n; i < hv.size(); ++i) sum += hv[i];
    double mean = sum / static_cast<double>(n);
    if (!best || mean > best_mean) {
      best = &s;
      best_mean = mean;
    }
  }
  if (!best) throw SelectionError(SelectionError::Kind::NoHistory, "no observations for any candidate strategy");
  return *best;
}

bool switch_triggered(const SelectionContext& ctx) {
  if (ctx.attempts_done < ctx.settings.min_optimization_attempts) return false;
  if (ctx.window.size() < static_cast<std::size_t>(ctx.settings.window_size)) return false;
  return count_violations(ctx.window, ctx.settings, ctx.measures) >= static_cast<std::size_t>(ctx.settings.threshold_exceeds);
}

std::string select_strategy(const SelectionContext& ctx, const std::vector<std::string>& order) {
  if (order.empty()) throw SelectionError(SelectionError::Kind::EmptyOrder, "no strategies to select from");
  if (std::find(order.begin(), order.end(), ctx.current_strategy) == order.end()) {
    throw SelectionError(SelectionError::Kind::UnknownStrategy, "current strategy '" + ctx.current_strategy + "' not in order");
  }
  if (!switch_triggered(ctx)) return ctx.current_strategy;
  for (const auto& s : order) {
    if (!ctx.tried.count(s)) return s;
  }
  return best_historical_strategy(ctx.history, order, ctx.settings.window_size);
}

}  // namespace saopt
