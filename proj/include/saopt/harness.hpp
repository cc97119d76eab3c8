#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "saopt/coord.hpp"
#include "saopt/ddm.hpp"
#include "saopt/platoon.hpp"
#include "saopt/rules.hpp"

namespace saopt::harness {

class ConfigNotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SimulationDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IncompatibleRuns : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Baseline { BestDistance, BestVelocity, Rules };
std::string_view to_string(Baseline b);
std::optional<Baseline> baseline_from_string(std::string_view name);

// Fixed configuration of the two single-strategy baselines.
AdaptationDecision baseline_decision(Baseline b);

// Desk-scale detection settings. RuleBased keeps the DDM's rule file.
SituationDetectionSettings detection_preset(DetectionAlgorithm algorithm, const SituationDetectionSettings& current);

struct Setup {
  DomainDataModel ddm;
  FallbackRuleSet fallback;
  std::optional<SituationRuleSet> situation_rules;
  platoon::Scenario scenario;
};

// Rule files named in the DDM resolve relative to the DDM file.
Setup load_setup(const std::filesystem::path& ddm_path, const std::filesystem::path& scenario_path,
                 std::optional<DetectionAlgorithm> detection = std::nullopt, std::optional<TriggerMethod> trigger = std::nullopt);

struct RunRow {
  Observation obs;
  double hypervolume = 0.0;
  SituationId situation = kNoise;  // as first detected; noise for baselines
};

struct RunResult {
  std::string label;
  std::string scenario;
  std::uint64_t seed = 0;
  double window = 0.0;
  std::vector<std::string> context_fields;
  std::vector<std::string> metric_names;
  std::vector<RunRow> rows;
  std::vector<DecisionRecord> decisions;
  std::size_t store_size = 0;
};

enum class Transport { InProcess, Http };

std::string framework_label(const DomainDataModel& ddm);

RunResult run_framework(const Setup& setup, std::uint64_t seed, Transport transport = Transport::InProcess);
// Baselines never consult the framework.
RunResult run_baseline(const Setup& setup, Baseline baseline, std::uint64_t seed);

// Cumulative trapezoid of `values` over `times`; starts at 0.
std::vector<double> auc_series(const std::vector<double>& times, const std::vector<double>& values);

// observations.csv, decisions.csv and run.json inside `dir`.
void write_run(const RunResult& run, const std::filesystem::path& dir);
// Reads back what write_run wrote; decisions are not read.
RunResult read_run(const std::filesystem::path& dir);
// All run directories below `root` (directories holding a run.json).
std::vector<std::filesystem::path> find_runs(const std::filesystem::path& root);

struct Stat {
  double mean = 0.0;
  double std = 0.0;  // population std over runs
  double min = 0.0;
  double max = 0.0;
};
Stat describe(const std::vector<double>& xs);

struct CellSummary {
  std::string label;
  std::vector<std::uint64_t> seeds;
  std::map<std::string, Stat> metrics;  // run means of each metric, plus "hypervolume"
  Stat final_auc;
  std::vector<double> times;
  std::vector<double> mean_auc;  // pointwise mean over runs
};

// Groups runs by label. Runs must share scenario and observation times.
std::vector<CellSummary> summarize(const std::vector<RunResult>& runs);
void write_summary_csv(const std::vector<CellSummary>& cells, const std::filesystem::path& path);
void write_auc_csv(const std::vector<CellSummary>& cells, const std::filesystem::path& path);
void write_auc_svg(const std::vector<CellSummary>& cells, const std::filesystem::path& path);

}  // namespace saopt::harness
