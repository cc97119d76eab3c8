#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace saopt {

enum class DataType { Int, Double };

std::string_view to_string(DataType t);

enum class DetectionAlgorithm { RuleBased, KMeans, DBSCAN, OPTICS };

std::string_view to_string(DetectionAlgorithm a);
std::optional<DetectionAlgorithm> detection_algorithm_from_string(std::string_view name);

enum class TriggerMethod { Hypervolume, Threshold };

std::string_view to_string(TriggerMethod m);
std::optional<TriggerMethod> trigger_method_from_string(std::string_view name);

/// Reason a Domain-Data-Model document was rejected.
enum class DdmErrorKind {
  MalformedDocument,
  MissingSection,
  MissingKey,
  UnknownKey,
  DuplicateKey,
  BadType,
  InvalidValue,
  UnknownAlgorithm,
  MissingAlgorithmSetting,
  BadRange,
  UnknownStrategyReference,
  MissingThresholdValue,
  UnknownStrategy,
};

std::string_view to_string(DdmErrorKind k);

class DdmError : public std::runtime_error {
 public:
  DdmError(DdmErrorKind kind, std::string key_path, const std::string& detail);

  DdmErrorKind kind() const noexcept { return kind_; }
  const std::string& key_path() const noexcept { return key_path_; }

 private:
  DdmErrorKind kind_;
  std::string key_path_;
};

using SettingValue = std::variant<double, std::string>;

struct UseCaseSection {
  std::string name;
  std::vector<std::string> available_strategies;
  std::string fallback_rules;

  bool operator==(const UseCaseSection&) const = default;
};

struct ContextFieldSpec {
  std::string name;
  DataType data_type = DataType::Double;

  bool operator==(const ContextFieldSpec&) const = default;
};

struct SituationDetectionSettings {
  DetectionAlgorithm algorithm = DetectionAlgorithm::RuleBased;
  std::map<std::string, SettingValue> settings;

  bool operator==(const SituationDetectionSettings&) const = default;

  double number(const std::string& key) const;
  std::optional<double> number_or(const std::string& key) const;
  std::string text(const std::string& key) const;
};

struct ContextSection {
  std::vector<ContextFieldSpec> data;  // declaration order
  SituationDetectionSettings situation_detection;

  bool operator==(const ContextSection&) const = default;
  const ContextFieldSpec* field(std::string_view name) const;
};

struct ParameterOptionSpec {
  std::string name;
  DataType data_type = DataType::Double;
  double min = 0.0;
  double max = 1.0;
  std::optional<std::vector<std::string>> strategies;  // absent: all strategies

  bool operator==(const ParameterOptionSpec&) const = default;
  bool applies_to(std::string_view strategy) const;
};

struct StrategySelectionSettings {
  int observations_between_adaptations = 1;
  int min_optimization_attempts = 1;
  int window_size = 1;
  int threshold_exceeds = 1;
  TriggerMethod method = TriggerMethod::Hypervolume;
  std::optional<double> hypervolume_threshold;

  bool operator==(const StrategySelectionSettings&) const = default;
};

struct ParameterSection {
  std::vector<ParameterOptionSpec> options;  // declaration order
  StrategySelectionSettings strategy_selection;

  bool operator==(const ParameterSection&) const = default;
};

struct PerformanceMeasureSpec {
  std::string name;
  DataType data_type = DataType::Double;
  bool higher_is_better = true;
  double reference_value = 0.0;
  std::optional<double> threshold_value;

  bool operator==(const PerformanceMeasureSpec&) const = default;
};

using MeasureSpecs = std::map<std::string, PerformanceMeasureSpec>;

/// Validated configuration of one managed use case. Immutable after parsing.
struct DomainDataModel {
  UseCaseSection use_case;
  ContextSection context;
  ParameterSection parameter_options;
  MeasureSpecs performance_measures;

  bool operator==(const DomainDataModel&) const = default;

  const StrategySelectionSettings& selection() const { return parameter_options.strategy_selection; }
  bool has_strategy(std::string_view strategy) const;
  const ParameterOptionSpec* option(std::string_view name) const;
};

/// Parses and validates a YAML Domain-Data-Model. Throws DdmError naming the
/// offending key path; never returns a partially filled model.
DomainDataModel parse_ddm(const std::string& text);
DomainDataModel load_ddm(const std::string& path);

/// Emits the model as YAML that parse_ddm accepts and maps back to an equal model.
std::string serialize_ddm(const DomainDataModel& ddm);

/// Checks the cross-section invariants. parse_ddm calls this; callers that
/// patch a model (e.g. the experiment harness) call it again afterwards.
void validate_ddm(const DomainDataModel& ddm);

/// Options whose strategy list contains `strategy` or is absent, in declaration order.
std::vector<ParameterOptionSpec> parameters_for_strategy(const DomainDataModel& ddm,
                                                         std::string_view strategy);

/// Settings keys each detection algorithm needs (required) or tolerates (optional).
struct AlgorithmSettingKeys {
  std::vector<std::vector<std::string>> required_alternatives;  // one alternative must be fully present
  std::vector<std::string> optional;
};
AlgorithmSettingKeys setting_keys_for(DetectionAlgorithm a);

}  // namespace saopt
