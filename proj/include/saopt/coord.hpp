#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "saopt/ddm.hpp"
#include "saopt/paramopt.hpp"
#include "saopt/rules.hpp"
#include "saopt/sitdet.hpp"
#include "saopt/store.hpp"
#include "saopt/types.hpp"

namespace saopt {

enum class DecisionSource { Fallback, Selection, Optimization };
std::string_view to_string(DecisionSource s);

struct DecisionRecord {
  std::size_t seq = 0;  // 1-based position in the decision log
  std::size_t round = 0;
  double timestamp = 0.0;
  SituationId situation = kNoise;
  AdaptationDecision decision;
  DecisionSource source = DecisionSource::Fallback;
};

struct SystemModel {
  SituationId current_situation = kNoise;   // detected in the latest round
  SituationId decided_situation = kNoise;   // situation of the last non-fallback decision
  AdaptationDecision current_decision;
  std::map<std::pair<SituationId, std::string>, int> attempts;
  std::map<SituationId, std::set<std::string>> tried;
  std::map<SituationId, std::string> active_strategy;
  std::optional<std::size_t> last_adaptation_round;  // last non-fallback decision
  std::vector<DecisionRecord> decision_log;
};

// First declared strategy with every applicable parameter at its bound midpoint.
AdaptationDecision initial_decision(const DomainDataModel& ddm);

// One optimizer evaluation per run of consecutive rows that share the
// situation and the configuration; the score is the mean hypervolume of the
// settled second half of the run.
std::vector<Evaluation> evaluations_for(const std::vector<EnrichedObservation>& rows, SituationId situation,
                                        const std::string& strategy);

struct CoordinatorOptions {
  std::uint64_t seed = 1;
};

// The framework loop: one call per observation, at most one decision per call.
class Coordinator {
 public:
  Coordinator(DomainDataModel ddm, FallbackRuleSet fallback, std::optional<SituationRuleSet> situation_rules = std::nullopt,
              CoordinatorOptions options = {});

  std::optional<DecisionRecord> on_observation(const Observation& obs);

  // Moves the model to `next`; the old situation's counters are kept.
  void propagate_situation_change(SituationId old_situation, SituationId next);

  const SystemModel& model() const { return model_; }
  const ObservationStore& store() const { return store_; }
  ObservationStore& store() { return store_; }
  const SituationDetector& detector() const { return detector_; }
  const ParameterOptimizer& optimizer() const { return optimizer_; }
  const std::vector<std::string>& errors() const { return errors_; }
  // Situation each observation was first assigned (before later relabeling).
  const std::vector<SituationId>& first_assigned() const { return first_assigned_; }

  void export_decisions_csv(const std::filesystem::path& path) const;

 private:
  DecisionRecord emit(double timestamp, SituationId situation, AdaptationDecision decision, DecisionSource source);
  DecisionRecord fallback_round(const Observation& obs, SituationId situation);
  AdaptationDecision plan(SituationId situation, DecisionSource& source);
  ParameterSetting optimize(SituationId situation, const std::string& strategy);
  ParameterSetting warm_start(SituationId situation, const std::string& strategy) const;

  DomainDataModel ddm_;
  FallbackRuleSet fallback_;
  CoordinatorOptions options_;
  ObservationStore store_;
  SituationDetector detector_;
  ParameterOptimizer optimizer_;
  SystemModel model_;
  std::size_t round_ = 0;
  std::vector<std::string> errors_;
  std::vector<SituationId> first_assigned_;
};

}  // namespace saopt
