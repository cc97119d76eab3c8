#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "saopt/ddm.hpp"
#include "saopt/types.hpp"

namespace saopt {

class StoreError : public std::runtime_error {
 public:
  enum class Kind { KeyMismatch, NonFiniteValue, SchemaViolation, NonMonotonicTimestamp };
  StoreError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

// Volume dominated by one performance vector relative to the reference point:
// the product of oriented gaps, or 0 once any gap is <= 0.
double compute_hypervolume(const ValueMap& metrics, const MeasureSpecs& specs);

// Field-level problems of an observation against the model; empty when valid.
std::vector<std::string> observation_errors(const Observation& obs, const DomainDataModel& ddm);

// Enrichment of one observation given its predecessor (nullptr for the first one).
EnrichedObservation enrich(const Observation& obs, const EnrichedObservation* prev, const MeasureSpecs& specs);

struct QueryFilter {
  std::optional<SituationId> situation;
  std::optional<std::string> strategy;
  std::optional<std::size_t> last_n;
};

// Append-only repository of enriched observations. One writer, many readers.
class ObservationStore {
 public:
  explicit ObservationStore(DomainDataModel ddm);

  // Also appends every ingested observation to `path` (one JSON record per line).
  void open_log(const std::filesystem::path& path);

  EnrichedObservation ingest(const Observation& obs);

  std::vector<EnrichedObservation> query(const QueryFilter& filter = {}) const;
  std::size_t size() const;
  EnrichedObservation at(std::size_t index) const;

  // Renames stored situations; ids absent from the mapping pass through.
  std::size_t relabel(const std::map<SituationId, SituationId>& mapping);
  // Overwrites the situations of the first labels.size() rows.
  std::size_t assign_situations(const std::vector<SituationId>& labels);

  void export_csv(const std::filesystem::path& path) const;

  // Replays an observation log, recomputing hypervolumes with the given model.
  static std::vector<Observation> read_log(const std::filesystem::path& path);

  const DomainDataModel& ddm() const { return ddm_; }

 private:
  DomainDataModel ddm_;
  mutable std::shared_mutex mutex_;
  std::vector<EnrichedObservation> rows_;
  std::optional<std::ofstream> log_;
};

std::string observation_to_json(const Observation& obs);
Observation observation_from_json(const std::string& line);

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace saopt
