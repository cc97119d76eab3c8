#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "saopt/ddm.hpp"

namespace saopt::testing {

inline std::string listing_text() {
  std::ifstream in(std::string(SAOPT_TEST_DATA) + "/listings_ddm.yaml");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string replace(std::string text, const std::string& from, const std::string& to) {
  auto pos = text.find(from);
  if (pos == std::string::npos) throw std::logic_error("fixture text not found: " + from);
  return text.replace(pos, from.size(), to);
}

// Twenty single-point corruptions of the listing document and the error each must raise.
inline std::vector<std::pair<std::string, DdmErrorKind>> ddm_mutations() {
  const std::string with_perf_cut = [] {
    auto t = listing_text();
    return t.substr(0, t.find("performance_measures:"));
  }();
  return {
      {with_perf_cut, DdmErrorKind::MissingSection},
      {replace(listing_text(), "use_case:\n  name: platooning_coordination\n", "use_case:\n"), DdmErrorKind::MissingKey},
      {replace(listing_text(), "  fallback_rules: \"Path.To.Rules\"\n", ""), DdmErrorKind::MissingKey},
      {replace(listing_text(), "      max: 100\n", "      max: 0\n"), DdmErrorKind::BadRange},
      {replace(listing_text(), "      max: 100\n", "      max: -3\n"), DdmErrorKind::BadRange},
      {replace(listing_text(), "      max: 2.0\n", "      max: 0.0\n"), DdmErrorKind::BadRange},
      {replace(listing_text(), "strategies: [\"s_1\"]", "strategies: [\"s_7\"]"), DdmErrorKind::UnknownStrategyReference},
      {replace(listing_text(), "method: \"hypervolume\"", "method: \"threshold\""), DdmErrorKind::MissingThresholdValue},
      {replace(listing_text(), "    hypervolume_threshold: 3.4\n", ""), DdmErrorKind::MissingThresholdValue},
      {replace(listing_text(), "algorithm: \"DBSCAN\"", "algorithm: \"MeanShift\""), DdmErrorKind::UnknownAlgorithm},
      {replace(listing_text(), "      eps: 34\n", ""), DdmErrorKind::MissingAlgorithmSetting},
      {replace(listing_text(), "algorithm: \"DBSCAN\"", "algorithm: \"OPTICS\""), DdmErrorKind::MissingAlgorithmSetting},
      {replace(listing_text(), "      data_type: int\n      min: 0\n", "      data_type: integer\n      min: 0\n"), DdmErrorKind::BadType},
      {replace(listing_text(), "      min: 0\n      max: 100\n", "      min: 0.5\n      max: 100\n"), DdmErrorKind::BadType},
      {replace(listing_text(), "    higher_is_better: True\n", "    higher_is_better: maybe\n"), DdmErrorKind::BadType},
      {replace(listing_text(), "    window_size: 5\n", "    window_size: five\n"), DdmErrorKind::BadType},
      {replace(listing_text(), "    threshold_exceeds: 3\n", "    threshold_exceeds: 6\n"), DdmErrorKind::BadRange},
      {replace(listing_text(), "    window_size: 5\n", "    window_size: 5\n    windw_size: 5\n"), DdmErrorKind::UnknownKey},
      {replace(listing_text(), "    context2:\n", "    context1:\n"), DdmErrorKind::DuplicateKey},
      {replace(listing_text(), "    reference_value: -1\n", ""), DdmErrorKind::MissingKey},
  };
}

}  // namespace saopt::testing
