#include "saopt/ddm.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace saopt {

std::string_view to_string(DataType t) { return t == DataType::Int ? "int" : "double"; }

std::string_view to_string(DetectionAlgorithm a) {
  switch (a) {
    case DetectionAlgorithm::RuleBased: return "RuleBased";
    case DetectionAlgorithm::KMeans: return "kMeans";
    case DetectionAlgorithm::DBSCAN: return "DBSCAN";
    case DetectionAlgorithm::OPTICS: return "OPTICS";
  }
  return "?";
}

std::optional<DetectionAlgorithm> detection_algorithm_from_string(std::string_view name) {
  if (name == "RuleBased") return DetectionAlgorithm::RuleBased;
  if (name == "kMeans" || name == "KMeans" || name == "K-Means") return DetectionAlgorithm::KMeans;
  if (name == "DBSCAN") return DetectionAlgorithm::DBSCAN;
  if (name == "OPTICS") return DetectionAlgorithm::OPTICS;
  return std::nullopt;
}

std::string_view to_string(TriggerMethod m) {
  return m == TriggerMethod::Hypervolume ? "hypervolume" : "threshold";
}

std::optional<TriggerMethod> trigger_method_from_string(std::string_view name) {
  if (name == "hypervolume") return TriggerMethod::Hypervolume;
  if (name == "threshold") return TriggerMethod::Threshold;
  return std::nullopt;
}

std::string_view to_string(DdmErrorKind k) {
  switch (k) {
    case DdmErrorKind::MalformedDocument: return "MalformedDocument";
    case DdmErrorKind::MissingSection: return "MissingSection";
    case DdmErrorKind::MissingKey: return "MissingKey";
    case DdmErrorKind::UnknownKey: return "UnknownKey";
    case DdmErrorKind::DuplicateKey: return "DuplicateKey";
    case DdmErrorKind::BadType: return "BadType";
    case DdmErrorKind::InvalidValue: return "InvalidValue";
    case DdmErrorKind::UnknownAlgorithm: return "UnknownAlgorithm";
    case DdmErrorKind::MissingAlgorithmSetting: return "MissingAlgorithmSetting";
    case DdmErrorKind::BadRange: return "BadRange";
    case DdmErrorKind::UnknownStrategyReference: return "UnknownStrategyReference";
    case DdmErrorKind::MissingThresholdValue: return "MissingThresholdValue";
    case DdmErrorKind::UnknownStrategy: return "UnknownStrategy";
  }
  return "?";
}

DdmError::DdmError(DdmErrorKind kind, std::string key_path, const std::string& detail)
    : std::runtime_error(std::string(to_string(kind)) + " at '" + key_path + "': " + detail),
      kind_(kind),
      key_path_(std::move(key_path)) {}

double SituationDetectionSettings::number(const std::string& key) const {
  auto v = number_or(key);
  if (!v) {
    throw DdmError(DdmErrorKind::MissingAlgorithmSetting,
                   "context.situation_detection_settings.settings." + key, "numeric setting required");
  }
  return *v;
}

std::optional<double> SituationDetectionSettings::number_or(const std::string& key) const {
  auto it = settings.find(key);
  if (it == settings.end()) return std::nullopt;
  if (const double* d = std::get_if<double>(&it->second)) return *d;
  return std::nullopt;
}

std::string SituationDetectionSettings::text(const std::string& key) const {
  auto it = settings.find(key);
  if (it != settings.end()) {
    if (const auto* s = std::get_if<std::string>(&it->second)) return *s;
  }
  throw DdmError(DdmErrorKind::MissingAlgorithmSetting,
                 "context.situation_detection_settings.settings." + key, "text setting required");
}

const ContextFieldSpec* ContextSection::field(std::string_view name) const {
  auto it = std::find_if(data.begin(), data.end(), [&](const auto& f) { return f.name == name; });
  return it == data.end() ? nullptr : &*it;
}

bool ParameterOptionSpec::applies_to(std::string_view strategy) const {
  if (!strategies) return true;
  return std::find(strategies->begin(), strategies->end(), strategy) != strategies->end();
}

bool DomainDataModel::has_strategy(std::string_view strategy) const {
  const auto& s = use_case.available_strategies;
  return std::find(s.begin(), s.end(), strategy) != s.end();
}

const ParameterOptionSpec* DomainDataModel::option(std::string_view name) const {
  const auto& o = parameter_options.options;
  auto it = std::find_if(o.begin(), o.end(), [&](const auto& p) { return p.name == name; });
  return it == o.end() ? nullptr : &*it;
}

AlgorithmSettingKeys setting_keys_for(DetectionAlgorithm a) {
  switch (a) {
    case DetectionAlgorithm::RuleBased: return {{{"rules"}}, {}};
    case DetectionAlgorithm::KMeans: return {{{"k"}, {"k_min", "k_max"}}, {"seed", "reference_datasets"}};
    case DetectionAlgorithm::DBSCAN: return {{{"eps", "min_samples"}}, {}};
    case DetectionAlgorithm::OPTICS: return {{{"min_samples", "min_cluster_size"}}, {"xi"}};
  }
  return {};
}

namespace {

std::string join_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

// Ordered (key, node) pairs of a mapping with duplicate and unknown-key rejection.
std::vector<std::pair<std::string, YAML::Node>> strict_entries(const YAML::Node& node, const std::string& path,
                                                               const std::set<std::string>* allowed) {
  if (!node.IsMap()) throw DdmError(DdmErrorKind::BadType, path, "expected a mapping");
  std::vector<std::pair<std::string, YAML::Node>> out;
  std::set<std::string> seen;
  for (const auto& kv : node) {
    if (!kv.first.IsScalar()) throw DdmError(DdmErrorKind::BadType, path, "mapping keys must be scalars");
    auto key = kv.first.as<std::string>();
    if (!seen.insert(key).second) {
      throw DdmError(DdmErrorKind::DuplicateKey, join_path(path, key), "key declared twice");
    }
    if (allowed && !allowed->count(key)) {
      throw DdmError(DdmErrorKind::UnknownKey, join_path(path, key), "unknown key");
    }
    out.emplace_back(key, kv.second);
  }
  return out;
}

const YAML::Node* find_entry(const std::vector<std::pair<std::string, YAML::Node>>& entries,
                             std::string_view key) {
  for (const auto& [k, v] : entries) {
    if (k == key) return &v;
  }
  return nullptr;
}

const YAML::Node& require(const std::vector<std::pair<std::string, YAML::Node>>& entries,
                          const std::string& path, const std::string& key) {
  const YAML::Node* n = find_entry(entries, key);
  if (!n) throw DdmError(DdmErrorKind::MissingKey, join_path(path, key), "required key missing");
  return *n;
}

std::string as_text(const YAML::Node& n, const std::string& path) {
  if (!n.IsScalar()) throw DdmError(DdmErrorKind::BadType, path, "expected a string");
  return n.as<std::string>();
}

bool looks_numeric(const std::string& s, double& out) {
  if (s.empty()) return false;
  std::istringstream is(s);
  is.imbue(std::locale::classic());
  is >> out;
  return is && is.eof() && std::isfinite(out);
}

double as_number(const YAML::Node& n, const std::string& path) {
  double v = 0.0;
  if (!n.IsScalar() || n.Tag() == "!" || !looks_numeric(n.Scalar(), v)) {
    throw DdmError(DdmErrorKind::BadType, path, "expected a number");
  }
  return v;
}

double as_typed(const YAML::Node& n, const std::string& path, DataType type) {
  double v = as_number(n, path);
  if (type == DataType::Int && std::floor(v) != v) {
    throw DdmError(DdmErrorKind::BadType, path, "value declared int must be integral");
  }
  return v;
}

int as_count(const YAML::Node& n, const std::string& path, int min_value) {
  double v = as_typed(n, path, DataType::Int);
  if (v < min_value) {
    throw DdmError(DdmErrorKind::InvalidValue, path, "must be >= " + std::to_string(min_value));
  }
  return static_cast<int>(v);
}

bool as_bool(const YAML::Node& n, const std::string& path) {
  if (!n.IsScalar()) throw DdmError(DdmErrorKind::BadType, path, "expected a boolean");
  const std::string& s = n.Scalar();
  if (s == "true" || s == "True" || s == "TRUE") return true;
  if (s == "false" || s == "False" || s == "FALSE") return false;
  throw DdmError(DdmErrorKind::BadType, path, "expected a boolean");
}

DataType as_data_type(const YAML::Node& n, const std::string& path) {
  auto s = as_text(n, path);
  if (s == "int") return DataType::Int;
  if (s == "double") return DataType::Double;
  throw DdmError(DdmErrorKind::BadType, path, "data_type must be int or double, got '" + s + "'");
}

std::vector<std::string> as_string_list(const YAML::Node& n, const std::string& path) {
  if (!n.IsSequence()) throw DdmError(DdmErrorKind::BadType, path, "expected a list");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n.size(); ++i) {
    out.push_back(as_text(n[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

UseCaseSection parse_use_case(const YAML::Node& node) {
  const std::string path = "use_case";
  static const std::set<std::string> keys{"name", "available_strategies", "fallback_rules"};
  auto e = strict_entries(node, path, &keys);
  UseCaseSection uc;
  uc.name = as_text(require(e, path, "name"), path + ".name");
  uc.available_strategies =
      as_string_list(require(e, path, "available_strategies"), path + ".available_strategies");
  if (uc.available_strategies.empty()) {
    throw DdmError(DdmErrorKind::InvalidValue, path + ".available_strategies", "at least one strategy required");
  }
  std::set<std::string> seen;
  for (const auto& s : uc.available_strategies) {
    if (!seen.insert(s).second) {
      throw DdmError(DdmErrorKind::DuplicateKey, path + ".available_strategies", "strategy '" + s + "' listed twice");
    }
  }
  uc.fallback_rules = as_text(require(e, path, "fallback_rules"), path + ".fallback_rules");
  return uc;
}

ContextSection parse_context(const YAML::Node& node) {
  const std::string path = "context";
  static const std::set<std::string> keys{"data", "situation_detection_settings"};
  auto e = strict_entries(node, path, &keys);
  ContextSection ctx;

  const std::string data_path = path + ".data";
  for (const auto& [name, spec] : strict_entries(require(e, path, "data"), data_path, nullptr)) {
    static const std::set<std::string> field_keys{"data_type"};
    const std::string fpath = data_path + "." + name;
    auto fe = strict_entries(spec, fpath, &field_keys);
    ctx.data.push_back({name, as_data_type(require(fe, fpath, "data_type"), fpath + ".data_type")});
  }
  if (ctx.data.empty()) throw DdmError(DdmErrorKind::InvalidValue, data_path, "at least one context field required");

  const std::string sd_path = path + ".situation_detection_settings";
  static const std::set<std::string> sd_keys{"algorithm", "settings"};
  auto sd = strict_entries(require(e, path, "situation_detection_settings"), sd_path, &sd_keys);
  auto algo_name = as_text(require(sd, sd_path, "algorithm"), sd_path + ".algorithm");
  auto algo = detection_algorithm_from_string(algo_name);
  if (!algo) throw DdmError(DdmErrorKind::UnknownAlgorithm, sd_path + ".algorithm", "'" + algo_name + "'");
  ctx.situation_detection.algorithm = *algo;

  const std::string set_path = sd_path + ".settings";
  if (const YAML::Node* settings = find_entry(sd, "settings"); settings && !settings->IsNull()) {
    for (const auto& [key, value] : strict_entries(*settings, set_path, nullptr)) {
      if (!value.IsScalar()) throw DdmError(DdmErrorKind::BadType, set_path + "." + key, "expected a scalar");
      double num = 0.0;
      if (value.Tag() != "!" && looks_numeric(value.Scalar(), num)) {
        ctx.situation_detection.settings[key] = num;
      } else {
        ctx.situation_detection.settings[key] = value.Scalar();
      }
    }
  }
  return ctx;
}

StrategySelectionSettings parse_selection(const YAML::Node& node, const std::string& path) {
  static const std::set<std::string> keys{"observations_between_adaptations", "min_optimization_attempts",
                                          "window_size", "threshold_exceeds", "method", "hypervolume_threshold"};
  auto e = strict_entries(node, path, &keys);
  StrategySelectionSettings s;
  s.observations_between_adaptations =
      as_count(require(e, path, "observations_between_adaptations"), path + ".observations_between_adaptations", 1);
  s.min_optimization_attempts =
      as_count(require(e, path, "min_optimization_attempts"), path + ".min_optimization_attempts", 0);
  s.window_size = as_count(require(e, path, "window_size"), path + ".window_size", 1);
  s.threshold_exceeds = as_count(require(e, path, "threshold_exceeds"), path + ".threshold_exceeds", 1);
  auto method_name = as_text(require(e, path, "method"), path + ".method");
  auto method = trigger_method_from_string(method_name);
  if (!method) throw DdmError(DdmErrorKind::InvalidValue, path + ".method", "unknown method '" + method_name + "'");
  s.method = *method;
  if (const YAML::Node* hv = find_entry(e, "hypervolume_threshold")) {
    s.hypervolume_threshold = as_number(*hv, path + ".hypervolume_threshold");
  }
  return s;
}

ParameterSection parse_parameters(const YAML::Node& node) {
  const std::string path = "parameter_options";
  static const std::set<std::string> keys{"options", "strategy_selection_settings"};
  auto e = strict_entries(node, path, &keys);
  ParameterSection ps;
  const std::string opt_path = path + ".options";
  for (const auto& [name, spec] : strict_entries(require(e, path, "options"), opt_path, nullptr)) {
    static const std::set<std::string> okeys{"data_type", "min", "max", "strategies"};
    const std::string p = opt_path + "." + name;
    auto oe = strict_entries(spec, p, &okeys);
    ParameterOptionSpec o;
    o.name = name;
    o.data_type = as_data_type(require(oe, p, "data_type"), p + ".data_type");
    o.min = as_typed(require(oe, p, "min"), p + ".min", o.data_type);
    o.max = as_typed(require(oe, p, "max"), p + ".max", o.data_type);
    if (const YAML::Node* st = find_entry(oe, "strategies")) o.strategies = as_string_list(*st, p + ".strategies");
    ps.options.push_back(std::move(o));
  }
  ps.strategy_selection = parse_selection(require(e, path, "strategy_selection_settings"),
                                          path + ".strategy_selection_settings");
  return ps;
}

MeasureSpecs parse_measures(const YAML::Node& node) {
  const std::string path = "performance_measures";
  MeasureSpecs out;
  for (const auto& [name, spec] : strict_entries(node, path, nullptr)) {
    static const std::set<std::string> keys{"data_type", "higher_is_better", "reference_value", "threshold_value"};
    const std::string p = path + "." + name;
    auto me = strict_entries(spec, p, &keys);
    PerformanceMeasureSpec m;
    m.name = name;
    m.data_type = as_data_type(require(me, p, "data_type"), p + ".data_type");
    m.higher_is_better = as_bool(require(me, p, "higher_is_better"), p + ".higher_is_better");
    m.reference_value = as_typed(require(me, p, "reference_value"), p + ".reference_value", m.data_type);
    if (const YAML::Node* t = find_entry(me, "threshold_value")) {
      m.threshold_value = as_typed(*t, p + ".threshold_value", m.data_type);
    }
    out.emplace(name, std::move(m));
  }
  if (out.empty()) throw DdmError(DdmErrorKind::InvalidValue, path, "at least one performance measure required");
  return out;
}

void validate_detection_settings(const SituationDetectionSettings& sd) {
  const std::string path = "context.situation_detection_settings.settings";
  auto keys = setting_keys_for(sd.algorithm);
  std::set<std::string> allowed(keys.optional.begin(), keys.optional.end());
  const std::vector<std::string>* chosen = nullptr;
  for (const auto& alt : keys.required_alternatives) {
    allowed.insert(alt.begin(), alt.end());
    bool all = std::all_of(alt.begin(), alt.end(), [&](const auto& k) { return sd.settings.count(k) > 0; });
    if (all && !chosen) chosen = &alt;
  }
  if (!chosen) {
    const auto& first = keys.required_alternatives.front();
    auto missing = std::find_if(first.begin(), first.end(), [&](const auto& k) { return !sd.settings.count(k); });
    throw DdmError(DdmErrorKind::MissingAlgorithmSetting, path + "." + *missing,
                   std::string("required by ") + std::string(to_string(sd.algorithm)));
  }
  for (const auto& [key, value] : sd.settings) {
    if (!allowed.count(key)) {
      throw DdmError(DdmErrorKind::UnknownKey, path + "." + key,
                     std::string("not a setting of ") + std::string(to_string(sd.algorithm)));
    }
    const bool wants_text = key == "rules";
    if (wants_text != std::holds_alternative<std::string>(value)) {
      throw DdmError(DdmErrorKind::BadType, path + "." + key, wants_text ? "expected a path" : "expected a number");
    }
  }
  auto positive_int = [&](const char* key) {
    if (auto v = sd.number_or(key); v && (*v < 1 || std::floor(*v) != *v)) {
      throw DdmError(DdmErrorKind::InvalidValue, path + "." + key, "must be a positive integer");
    }
  };
  for (const char* k : {"min_samples", "min_cluster_size", "k", "k_min", "k_max", "reference_datasets"}) positive_int(k);
  if (auto eps = sd.number_or("eps"); eps && *eps <= 0) {
    throw DdmError(DdmErrorKind::InvalidValue, path + ".eps", "must be > 0");
  }
  if (auto xi = sd.number_or("xi"); xi && (*xi <= 0 || *xi >= 1)) {
    throw DdmError(DdmErrorKind::InvalidValue, path + ".xi", "must lie in (0, 1)");
  }
  if (auto lo = sd.number_or("k_min"), hi = sd.number_or("k_max"); lo && hi && *lo > *hi) {
    throw DdmError(DdmErrorKind::BadRange, path + ".k_min", "k_min must not exceed k_max");
  }
}

}  // namespace

void validate_ddm(const DomainDataModel& ddm) {
  validate_detection_settings(ddm.context.situation_detection);

  std::set<std::string> option_names;
  for (const auto& o : ddm.parameter_options.options) {
    const std::string p = "parameter_options.options." + o.name;
    if (!option_names.insert(o.name).second) throw DdmError(DdmErrorKind::DuplicateKey, p, "option declared twice");
    if (!(o.min < o.max)) throw DdmError(DdmErrorKind::BadRange, p, "min must be < max");
    if (o.strategies) {
      for (const auto& s : *o.strategies) {
        if (!ddm.has_strategy(s)) {
          throw DdmError(DdmErrorKind::UnknownStrategyReference, p + ".strategies",
                         "'" + s + "' is not in use_case.available_strategies");
        }
      }
    }
  }

  const auto& sel = ddm.selection();
  const std::string sel_path = "parameter_options.strategy_selection_settings";
  if (sel.threshold_exceeds > sel.window_size) {
    throw DdmError(DdmErrorKind::BadRange, sel_path + ".threshold_exceeds", "must not exceed window_size");
  }
  if (sel.method == TriggerMethod::Hypervolume && !sel.hypervolume_threshold) {
    throw DdmError(DdmErrorKind::MissingThresholdValue, sel_path + ".hypervolume_threshold",
                   "required when method is hypervolume");
  }
  if (sel.method == TriggerMethod::Threshold) {
    for (const auto& [name, m] : ddm.performance_measures) {
      if (!m.threshold_value) {
        throw DdmError(DdmErrorKind::MissingThresholdValue, "performance_measures." + name + ".threshold_value",
                       "required when method is threshold");
      }
    }
  }
}

DomainDataModel parse_ddm(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw DdmError(DdmErrorKind::MalformedDocument, "", e.what());
  }
  static const std::set<std::string> sections{"use_case", "context", "parameter_options", "performance_measures"};
  if (!root.IsMap()) throw DdmError(DdmErrorKind::MalformedDocument, "", "document root must be a mapping");
  auto e = strict_entries(root, "", &sections);
  for (const auto& s : {"use_case", "context", "parameter_options", "performance_measures"}) {
    if (!find_entry(e, s)) throw DdmError(DdmErrorKind::MissingSection, s, "section missing");
  }
  DomainDataModel ddm;
  ddm.use_case = parse_use_case(*find_entry(e, "use_case"));
  ddm.context = parse_context(*find_entry(e, "context"));
  ddm.parameter_options = parse_parameters(*find_entry(e, "parameter_options"));
  ddm.performance_measures = parse_measures(*find_entry(e, "performance_measures"));
  validate_ddm(ddm);
  return ddm;
}

DomainDataModel load_ddm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open DDM file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_ddm(ss.str());
}

namespace {

void emit_number(YAML::Emitter& out, double v, DataType type) {
  if (type == DataType::Int) {
    out << static_cast<long long>(v);
  } else {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os.precision(17);
    os << v;
    std::string s = os.str();
    if (s.find_first_of(".eE") == std::string::npos) s += ".0";
    out << s;
  }
}

void emit_flow_list(YAML::Emitter& out, const std::vector<std::string>& items) {
  out << YAML::Flow << YAML::BeginSeq;
  for (const auto& s : items) out << YAML::DoubleQuoted << s;
  out << YAML::EndSeq;
}

}  // namespace

std::string serialize_ddm(const DomainDataModel& ddm) {
  YAML::Emitter out;
  out << YAML::BeginMap;

  out << YAML::Key << "use_case" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << ddm.use_case.name;
  out << YAML::Key << "available_strategies" << YAML::Value;
  emit_flow_list(out, ddm.use_case.available_strategies);
  out << YAML::Key << "fallback_rules" << YAML::Value << YAML::DoubleQuoted << ddm.use_case.fallback_rules;
  out << YAML::EndMap;

  out << YAML::Key << "context" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "data" << YAML::Value << YAML::BeginMap;
  for (const auto& f : ddm.context.data) {
    out << YAML::Key << f.name << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "data_type" << YAML::Value << std::string(to_string(f.data_type));
    out << YAML::EndMap;
  }
  out << YAML::EndMap;
  out << YAML::Key << "situation_detection_settings" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "algorithm" << YAML::Value << YAML::DoubleQuoted
      << std::string(to_string(ddm.context.situation_detection.algorithm));
  out << YAML::Key << "settings" << YAML::Value << YAML::BeginMap;
  for (const auto& [k, v] : ddm.context.situation_detection.settings) {
    out << YAML::Key << k << YAML::Value;
    if (const double* d = std::get_if<double>(&v)) {
      emit_number(out, *d, std::floor(*d) == *d ? DataType::Int : DataType::Double);
    } else {
      out << YAML::DoubleQuoted << std::get<std::string>(v);
    }
  }
  out << YAML::EndMap << YAML::EndMap << YAML::EndMap;

  out << YAML::Key << "parameter_options" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "options" << YAML::Value << YAML::BeginMap;
  for (const auto& o : ddm.parameter_options.options) {
    out << YAML::Key << o.name << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "data_type" << YAML::Value << std::string(to_string(o.data_type));
    out << YAML::Key << "min" << YAML::Value;
    emit_number(out, o.min, o.data_type);
    out << YAML::Key << "max" << YAML::Value;
    emit_number(out, o.max, o.data_type);
    if (o.strategies) {
      out << YAML::Key << "strategies" << YAML::Value;
      emit_flow_list(out, *o.strategies);
    }
    out << YAML::EndMap;
  }
  out << YAML::EndMap;
  const auto& sel = ddm.selection();
  out << YAML::Key << "strategy_selection_settings" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "observations_between_adaptations" << YAML::Value << sel.observations_between_adaptations;
  out << YAML::Key << "min_optimization_attempts" << YAML::Value << sel.min_optimization_attempts;
  out << YAML::Key << "window_size" << YAML::Value << sel.window_size;
  out << YAML::Key << "threshold_exceeds" << YAML::Value << sel.threshold_exceeds;
  out << YAML::Key << "method" << YAML::Value << YAML::DoubleQuoted << std::string(to_string(sel.method));
  if (sel.hypervolume_threshold) {
    out << YAML::Key << "hypervolume_threshold" << YAML::Value;
    emit_number(out, *sel.hypervolume_threshold, DataType::Double);
  }
  out << YAML::EndMap << YAML::EndMap;

  out << YAML::Key << "performance_measures" << YAML::Value << YAML::BeginMap;
  for (const auto& [name, m] : ddm.performance_measures) {
    out << YAML::Key << name << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "data_type" << YAML::Value << std::string(to_string(m.data_type));
    out << YAML::Key << "higher_is_better" << YAML::Value << (m.higher_is_better ? "True" : "False");
    out << YAML::Key << "reference_value" << YAML::Value;
    emit_number(out, m.reference_value, m.data_type);
    if (m.threshold_value) {
      out << YAML::Key << "threshold_value" << YAML::Value;
      emit_number(out, *m.threshold_value, m.data_type);
    }
    out << YAML::EndMap;
  }
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

std::vector<ParameterOptionSpec> parameters_for_strategy(const DomainDataModel& ddm, std::string_view strategy) {
  if (!ddm.has_strategy(strategy)) {
    throw DdmError(DdmErrorKind::UnknownStrategy, "use_case.available_strategies",
                   "'" + std::string(strategy) + "' is not an available strategy");
  }
  std::vector<ParameterOptionSpec> out;
  for (const auto& o : ddm.parameter_options.options) {
    if (o.applies_to(strategy)) out.push_back(o);
  }
  return out;
}

}  // namespace saopt
