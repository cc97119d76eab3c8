#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "saopt/cluster.hpp"
#include "saopt/ddm.hpp"
#include "saopt/rules.hpp"
#include "saopt/types.hpp"

namespace saopt {

// Keeps its own copy of every context vector it has seen and re-clusters the
// whole history on each call.
class SituationDetector {
 public:
  // RuleBased detection needs `rules`; the other algorithms ignore them.
  SituationDetector(const DomainDataModel& ddm, std::optional<SituationRuleSet> rules = std::nullopt, std::uint64_t seed = 7);

  SituationId detect(const ValueMap& context);

  // Stabilized labels for the whole history after the last call.
  const std::vector<SituationId>& labels() const { return labels_; }
  // Fresh-to-stable id mapping of the last clustering round.
  const std::map<SituationId, SituationId>& last_mapping() const { return last_mapping_; }
  std::size_t min_history() const { return min_history_; }
  std::size_t history_size() const { return history_.size(); }

 private:
  std::vector<SituationId> cluster(const Points& standardized) const;

  SituationDetectionSettings settings_;
  std::vector<std::string> fields_;
  std::optional<SituationRuleSet> rules_;
  std::uint64_t seed_;
  std::size_t min_history_ = 10;
  Points history_;
  std::vector<SituationId> labels_;
  std::map<SituationId, SituationId> last_mapping_;
  SituationId max_used_ = kNoise;
};

}  // namespace saopt
