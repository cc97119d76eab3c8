#include "saopt/rules.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace saopt {

bool Condition::holds(double x) const {
  switch (op) {
    case CompareOp::Less: return x < value;
    case CompareOp::LessEqual: return x <= value;
    case CompareOp::Greater: return x > value;
    case CompareOp::GreaterEqual: return x >= value;
    case CompareOp::Equal: return x == value;
  }
  return false;
}

namespace {

[[noreturn]] void malformed(const std::string& what) { throw RuleError(RuleError::Kind::Malformed, what); }

double number(const YAML::Node& n, const std::string& where) {
  if (!n || !n.IsScalar()) malformed(where + ": expected a number");
  try {
    double v = n.as<double>();
    if (!std::isfinite(v)) malformed(where + ": value must be finite");
    return v;
  } catch (const YAML::Exception&) {
    malformed(where + ": expected a number");
  }
}

void only_keys(const YAML::Node& n, const std::set<std::string>& keys, const std::string& where) {
  if (!n.IsMap()) malformed(where + ": expected a mapping");
  for (const auto& kv : n) {
    auto k = kv.first.as<std::string>();
    if (!keys.count(k)) malformed(where + ": unknown key '" + k + "'");
  }
}

CompareOp parse_op(const std::string& s, const std::string& where) {
  if (s == "<") return CompareOp::Less;
  if (s == "<=") return CompareOp::LessEqual;
  if (s == ">") return CompareOp::Greater;
  if (s == ">=") return CompareOp::GreaterEqual;
  if (s == "==") return CompareOp::Equal;
  malformed(where + ": unknown comparison operator '" + s + "'");
}

std::vector<Condition> parse_conditions(const YAML::Node& n, const std::string& where) {
  std::vector<Condition> out;
  if (!n) return out;
  if (!n.IsSequence()) malformed(where + ": 'when' must be a list");
  for (std::size_t i = 0; i < n.size(); ++i) {
    const std::string w = where + ".when[" + std::to_string(i) + "]";
    only_keys(n[i], {"field", "op", "value"}, w);
    if (!n[i]["field"] || !n[i]["op"]) malformed(w + ": needs field, op and value");
    out.push_back({n[i]["field"].as<std::string>(), parse_op(n[i]["op"].as<std::string>(), w), number(n[i]["value"], w + ".value")});
  }
  return out;
}

YAML::Node load_root(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    malformed(std::string("rule file is not valid YAML: ") + e.what());
  }
  only_keys(root, {"rules", "default"}, "rule file");
  if (root["rules"] && !root["rules"].IsSequence()) malformed("'rules' must be a list");
  return root;
}

template <class Action, class ParseAction>
RuleSet<Action> parse_rules(const std::string& text, ParseAction parse_action) {
  YAML::Node root = load_root(text);
  RuleSet<Action> set;
  if (const auto rules = root["rules"]) {
    for (std::size_t i = 0; i < rules.size(); ++i) {
      const std::string w = "rules[" + std::to_string(i) + "]";
      only_keys(rules[i], {"when", "then"}, w);
      if (!rules[i]["then"]) malformed(w + ": missing 'then'");
      set.rules.push_back({parse_conditions(rules[i]["when"], w), parse_action(rules[i]["then"], w + ".then")});
    }
  }
  if (const auto d = root["default"]) set.otherwise = parse_action(d, "default");
  return set;
}

SituationId parse_situation(const YAML::Node& n, const std::string& where) {
  only_keys(n, {"situation"}, where);
  double v = number(n["situation"], where + ".situation");
  if (std::floor(v) != v || v < -1) malformed(where + ".situation: must be an integer >= -1");
  return static_cast<SituationId>(v);
}

AdaptationDecision parse_decision(const YAML::Node& n, const std::string& where) {
  only_keys(n, {"strategy", "parameters"}, where);
  if (!n["strategy"] || !n["strategy"].IsScalar()) malformed(where + ": missing strategy");
  AdaptationDecision d;
  d.strategy = n["strategy"].as<std::string>();
  if (const auto p = n["parameters"]) {
    if (!p.IsMap()) malformed(where + ".parameters: expected a mapping");
    for (const auto& kv : p) {
      auto name = kv.first.as<std::string>();
      d.parameters[name] = number(kv.second, where + ".parameters." + name);
    }
  }
  return d;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open rule file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

SituationRuleSet parse_situation_rules(const std::string& text) {
  auto set = parse_rules<SituationId>(text, parse_situation);
  for (const auto& r : set.rules) {
    if (r.then < 0) malformed("situation rules must map to ids >= 0; use the default for -1");
  }
  return set;
}

SituationRuleSet load_situation_rules(const std::string& path) { return parse_situation_rules(read_file(path)); }

FallbackRuleSet parse_fallback_rules(const std::string& text) {
  auto set = parse_rules<AdaptationDecision>(text, parse_decision);
  if (!set.otherwise) throw RuleError(RuleError::Kind::MissingDefault, "fallback rules need a default entry");
  return set;
}

FallbackRuleSet load_fallback_rules(const std::string& path) { return parse_fallback_rules(read_file(path)); }

std::vector<std::string> decision_errors(const AdaptationDecision& d, const DomainDataModel& ddm) {
  std::vector<std::string> errors;
  if (!ddm.has_strategy(d.strategy)) {
    errors.push_back("unknown strategy '" + d.strategy + "'");
    return errors;
  }
  auto specs = parameters_for_strategy(ddm, d.strategy);
  for (const auto& spec : specs) {
    auto it = d.parameters.find(spec.name);
    if (it == d.parameters.end()) {
      errors.push_back("parameter '" + spec.name + "' missing");
      continue;
    }
    double v = it->second;
    if (!std::isfinite(v)) {
      errors.push_back("parameter '" + spec.name + "' is not finite");
    } else if (spec.data_type == DataType::Int && std::floor(v) != v) {
      errors.push_back("parameter '" + spec.name + "' must be integral");
    } else if (v < spec.min || v > spec.max) {
      errors.push_back("parameter '" + spec.name + "' outside its bounds");
    }
  }
  for (const auto& [name, v] : d.parameters) {
    if (std::none_of(specs.begin(), specs.end(), [&](const auto& s) { return s.name == name; })) {
      errors.push_back("parameter '" + name + "' does not apply to " + d.strategy);
    }
  }
  return errors;
}

void validate_fallback_rules(const FallbackRuleSet& rules, const DomainDataModel& ddm) {
  rules.check_fields(ddm.context);
  auto check = [&](const AdaptationDecision& d) {
    auto errors = decision_errors(d, ddm);
    if (!errors.empty()) throw RuleError(RuleError::Kind::InvalidAction, "fallback action invalid: " + errors.front());
  };
  for (const auto& r : rules.rules) check(r.then);
  if (rules.otherwise) check(*rules.otherwise);
}

SituationId rule_based_detect(const SituationRuleSet& rules, const ValueMap& context) {
  return rules.match(context).value_or(kNoise);
}

AdaptationDecision apply_fallback(const FallbackRuleSet& rules, const ValueMap& context) {
  auto d = rules.match(context);
  if (!d) throw RuleError(RuleError::Kind::MissingDefault, "fallback rules produced no decision");
  return *d;
}

}  // namespace saopt
