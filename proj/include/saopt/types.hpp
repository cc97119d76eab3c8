#pragma once

#include <map>
#include <string>

namespace saopt {

using SituationId = int;
inline constexpr SituationId kNoise = -1;

// Named scalar values: context readings, metrics, parameter settings.
using ValueMap = std::map<std::string, double>;
using ParameterSetting = ValueMap;

struct AdaptationDecision {
  std::string strategy;
  ParameterSetting parameters;

  bool operator==(const AdaptationDecision&) const = default;
};

struct Observation {
  double timestamp = 0.0;  // seconds since run start
  ValueMap context;
  AdaptationDecision input;  // configuration active while the metrics were measured
  ValueMap metrics;
};

struct EnrichedObservation {
  Observation base;
  double hypervolume = 0.0;
  double config_active_for = 0.0;
  SituationId situation = kNoise;
};

}  // namespace saopt
