#include "saopt/sitdet.hpp"

#include <algorithm>
#include <cmath>

namespace saopt {

SituationDetector::SituationDetector(const DomainDataModel& ddm, std::optional<SituationRuleSet> rules, std::uint64_t seed)
    : settings_(ddm.context.situation_detection), rules_(std::move(rules)), seed_(seed) {
  for (const auto& f : ddm.context.data) fields_.push_back(f.name);
  if (auto s = settings_.number_or("seed")) seed_ = static_cast<std::uint64_t>(*s);
  switch (settings_.algorithm) {
    case DetectionAlgorithm::RuleBased:
      if (!rules_) {
        throw DdmError(DdmErrorKind::MissingAlgorithmSetting, "context.situation_detection_settings.settings.rules", "rule set not loaded");
      }
      rules_->check_fields(ddm.context);
      min_history_ = 0;
      break;
    case DetectionAlgorithm::KMeans: {
      auto k_max = settings_.number_or("k") ? settings_.number("k") : settings_.number("k_max");
      min_history_ = std::max<std::size_t>(10, static_cast<std::size_t>(2 * k_max));
      break;
    }
    case DetectionAlgorithm::DBSCAN:
    case DetectionAlgorithm::OPTICS:
      min_history_ = std::max<std::size_t>(10, static_cast<std::size_t>(settings_.number("min_samples")));
      break;
  }
}

std::vector<SituationId> SituationDetector::cluster(const Points& pts) const {
  switch (settings_.algorithm) {
    case DetectionAlgorithm::KMeans:
      if (auto k = settings_.number_or("k")) return kmeans_cluster(pts, static_cast<int>(*k), seed_).labels;
      return kmeans_cluster_auto(pts, static_cast<int>(settings_.number("k_min")), static_cast<int>(settings_.number("k_max")), seed_,
                                 static_cast<int>(settings_.number_or("reference_datasets").value_or(10)))
          .labels;
    case DetectionAlgorithm::DBSCAN:
      return dbscan_cluster(pts, settings_.number("eps"), static_cast<int>(settings_.number("min_samples"))).labels;
    case DetectionAlgorithm::OPTICS:
      return optics_cluster(pts, static_cast<int>(settings_.number("min_samples")), static_cast<int>(settings_.number("min_cluster_size")),
                            settings_.number_or("xi").value_or(0.05))
          .labels;
    case DetectionAlgorithm::RuleBased:
      break;
  }
  return {};
}

SituationId SituationDetector::detect(const ValueMap& context) {
  if (settings_.algorithm == DetectionAlgorithm::RuleBased) {
    SituationId s = rule_based_detect(*rules_, context);
    labels_.push_back(s);
    last_mapping_.clear();
    return s;
  }
  Point p;
  for (const auto& f : fields_) {
    auto it = context.find(f);
    if (it == context.end()) throw RuleError(RuleError::Kind::UnknownField, "context field '" + f + "' missing");
    p.push_back(it->second);
  }
  history_.push_back(std::move(p));
  if (history_.size() < min_history_) {
    labels_.push_back(kNoise);
    last_mapping_.clear();
    return kNoise;
  }
  auto fresh = cluster(standardize(history_));
  std::vector<SituationId> previous = labels_;
  auto outcome = stabilize_labels(previous, fresh, max_used_);
  labels_ = std::move(outcome.labels);
  last_mapping_ = std::move(outcome.id_mapping);
  for (SituationId l : labels_) max_used_ = std::max(max_used_, l);
  return labels_.back();
}

}  // namespace saopt
