#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "saopt/ddm.hpp"
#include "saopt/types.hpp"

namespace saopt {

enum class CompareOp { Less, LessEqual, Greater, GreaterEqual, Equal };

struct Condition {
  std::string field;
  CompareOp op = CompareOp::Equal;
  double value = 0.0;

  bool holds(double x) const;
};

class RuleError : public std::runtime_error {
 public:
  enum class Kind { Malformed, UnknownField, MissingDefault, InvalidAction };
  RuleError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

// Ordered condition -> action rules; the first rule whose conditions all hold wins.
template <class Action>
struct RuleSet {
  struct Rule {
    std::vector<Condition> when;
    Action then;
  };
  std::vector<Rule> rules;
  std::optional<Action> otherwise;

  std::optional<Action> match(const ValueMap& context) const {
    for (const auto& rule : rules) {
      bool all = true;
      for (const auto& c : rule.when) {
        auto it = context.find(c.field);
        if (it == context.end()) throw RuleError(RuleError::Kind::UnknownField, "rule references unknown field '" + c.field + "'");
        if (!c.holds(it->second)) {
          all = false;
          break;
        }
      }
      if (all) return rule.then;
    }
    return otherwise;
  }

  // Every referenced field must be a declared context field.
  void check_fields(const ContextSection& ctx) const {
    for (const auto& rule : rules) {
      for (const auto& c : rule.when) {
        if (!ctx.field(c.field)) throw RuleError(RuleError::Kind::UnknownField, "rule references undeclared context field '" + c.field + "'");
      }
    }
  }
};

using SituationRuleSet = RuleSet<SituationId>;
using FallbackRuleSet = RuleSet<AdaptationDecision>;

SituationRuleSet parse_situation_rules(const std::string& text);
SituationRuleSet load_situation_rules(const std::string& path);

// A default rule is mandatory so that the fallback path always yields a decision.
FallbackRuleSet parse_fallback_rules(const std::string& text);
FallbackRuleSet load_fallback_rules(const std::string& path);

// Checks every action against the model: known strategy, exact parameter set, bounds.
void validate_fallback_rules(const FallbackRuleSet& rules, const DomainDataModel& ddm);

// First matching rule's situation, -1 when nothing matches.
SituationId rule_based_detect(const SituationRuleSet& rules, const ValueMap& context);
AdaptationDecision apply_fallback(const FallbackRuleSet& rules, const ValueMap& context);

// Validation of a single decision against the model; empty when valid.
std::vector<std::string> decision_errors(const AdaptationDecision& d, const DomainDataModel& ddm);

}  // namespace saopt
