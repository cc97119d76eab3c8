#include "saopt/coord.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "saopt/stratsel.hpp"

namespace saopt {

std::string_view to_string(DecisionSource s) {
  switch (s) {
    case DecisionSource::Fallback: return "fallback";
    case DecisionSource::Selection: return "selection";
    case DecisionSource::Optimization: return "optimization";
  }
  return "?";
}

namespace {

double midpoint(const ParameterOptionSpec& p) {
  double m = 0.5 * (p.min + p.max);
  return p.data_type == DataType::Int ? std::round(m) : m;
}

}  // namespace

AdaptationDecision initial_decision(const DomainDataModel& ddm) {
  AdaptationDecision d;
  d.strategy = ddm.use_case.available_strategies.front();
  for (const auto& p : parameters_for_strategy(ddm, d.strategy)) d.parameters[p.name] = midpoint(p);
  return d;
}

std::vector<Evaluation> evaluations_for(const std::vector<EnrichedObservation>& rows, SituationId situation, const std::string& strategy) {
  std::vector<Evaluation> out;
  std::size_t i = 0;
  while (i < rows.size()) {
    const auto& r = rows[i];
    if (r.situation != situation || r.base.input.strategy != strategy) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < rows.size() && rows[j].situation == situation && rows[j].base.input == r.base.input) ++j;
    const std::size_t len = j - i;
    double sum = 0.0;
    for (std::size_t k = i + len / 2; k < j; ++k) sum += rows[k].hypervolume;
    out.push_back({r.base.input.parameters, sum / static_cast<double>(len - len / 2)});
    i = j;
  }
  return out;
}

Coordinator::Coordinator(DomainDataModel ddm, FallbackRuleSet fallback, std::optional<SituationRuleSet> situation_rules, CoordinatorOptions options)
    : ddm_(std::move(ddm)),
      fallback_(std::move(fallback)),
      options_(options),
      store_(ddm_),
      detector_(ddm_, std::move(situation_rules), options.seed),
      optimizer_(options.seed) {
  validate_fallback_rules(fallback_, ddm_);
  model_.current_decision = initial_decision(ddm_);
}

void Coordinator::propagate_situation_change(SituationId old_situation, SituationId next) {
  if (old_situation == next) return;
  // The model only ever tracks the latest detection; what the current decision
  // was made for is kept apart so a change during the waiting time survives.
  model_.current_situation = next;
}

DecisionRecord Coordinator::emit(double timestamp, SituationId situation, AdaptationDecision decision, DecisionSource source) {
  DecisionRecord rec;
  rec.seq = model_.decision_log.size() + 1;
  rec.round = round_;
  rec.timestamp = timestamp;
  rec.situation = situation;
  rec.decision = std::move(decision);
  rec.source = source;
  model_.current_decision = rec.decision;
  if (source != DecisionSource::Fallback) {
    model_.decided_situation = situation;
    model_.last_adaptation_round = round_;
  }
  model_.decision_log.push_back(rec);
  return rec;
}

DecisionRecord Coordinator::fallback_round(const Observation& obs, SituationId situation) {
  return emit(obs.timestamp, situation, apply_fallback(fallback_, obs.context), DecisionSource::Fallback);
}

std::optional<DecisionRecord> Coordinator::on_observation(const Observation& obs) {
  try {
    store_.ingest(obs);
  } catch (const StoreError& e) {
    errors_.push_back(std::string("rejected observation: ") + e.what());
    return std::nullopt;
  }
  struct RoundGuard {
    std::size_t& r;
    ~RoundGuard() { ++r; }
  } guard{round_};

  SituationId s = kNoise;
  try {
    s = detector_.detect(obs.context);
    if (detector_.labels().size() == store_.size()) store_.assign_situations(detector_.labels());
  } catch (const std::exception& e) {
    errors_.push_back("round " + std::to_string(round_) + ": detection: " + e.what());
    s = kNoise;
  }
  first_assigned_.push_back(s);
  propagate_situation_change(model_.current_situation, s);

  if (s == kNoise) return fallback_round(obs, s);

  const auto between = static_cast<std::size_t>(ddm_.selection().observations_between_adaptations);
  if (model_.last_adaptation_round && round_ - *model_.last_adaptation_round < between) return std::nullopt;

  try {
    DecisionSource source = DecisionSource::Optimization;
    AdaptationDecision d = plan(s, source);
    return emit(obs.timestamp, s, std::move(d), source);
  } catch (const std::exception& e) {
    errors_.push_back("round " + std::to_string(round_) + ": " + e.what());
    return fallback_round(obs, s);
  }
}

AdaptationDecision Coordinator::plan(SituationId s, DecisionSource& source) {
  const auto& sel = ddm_.selection();
  const auto& order = ddm_.use_case.available_strategies;

  // The first situation ever detected starts optimizing right away; any later
  // difference to the situation of the last decision goes through selection.
  const bool first = model_.decided_situation == kNoise;
  const bool changed = !first && s != model_.decided_situation;
  auto active = model_.active_strategy.find(s);
  const std::string current = active != model_.active_strategy.end() ? active->second : order.front();
  const int done = model_.attempts[{s, current}];

  std::string strategy = current;
  if (!changed && done < sel.min_optimization_attempts) {
    source = DecisionSource::Optimization;
  } else {
    SelectionContext ctx;
    ctx.current_strategy = current;
    ctx.attempts_done = done;
    ctx.window = store_.query({s, std::nullopt, static_cast<std::size_t>(sel.window_size)});
    ctx.tried = model_.tried[s];
    ctx.history = store_.query({s, std::nullopt, std::nullopt});
    ctx.settings = sel;
    ctx.measures = ddm_.performance_measures;
    strategy = select_strategy(ctx, order);
    source = DecisionSource::Selection;
  }

  ParameterSetting params = optimize(s, strategy);

  if (strategy != current) model_.attempts[{s, strategy}] = 0;
  model_.attempts[{s, strategy}] += 1;
  model_.tried[s].insert(strategy);
  model_.active_strategy[s] = strategy;
  return {strategy, std::move(params)};
}

ParameterSetting Coordinator::optimize(SituationId s, const std::string& strategy) {
  const SurrogateKey key{s, strategy};
  auto evals = evaluations_for(store_.query(), s, strategy);

  // Relabeling or a still-running configuration can rewrite past evaluations;
  // the surrogate is extended only while its history stays a prefix.
  const SurrogateState* st = optimizer_.state(key);
  bool prefix = st && st->evaluations.size() <= evals.size();
  for (std::size_t i = 0; prefix && i < st->evaluations.size(); ++i) {
    prefix = st->evaluations[i].setting == evals[i].setting && st->evaluations[i].score == evals[i].score;
  }
  if (st && !prefix) optimizer_.forget(key);
  const std::size_t known = prefix ? st->evaluations.size() : evals.size();
  optimizer_.activate(key, [&] { return evals; });
  for (std::size_t i = known; i < evals.size(); ++i) optimizer_.observe(key, evals[i].setting, evals[i].score);

  return optimizer_.propose(key, parameters_for_strategy(ddm_, strategy), warm_start(s, strategy));
}

ParameterSetting Coordinator::warm_start(SituationId, const std::string& strategy) const {
  ParameterSetting out;
  for (const auto& p : parameters_for_strategy(ddm_, strategy)) {
    std::optional<double> v;
    if (auto it = model_.current_decision.parameters.find(p.name); it != model_.current_decision.parameters.end()) v = it->second;
    for (auto r = model_.decision_log.rbegin(); !v && r != model_.decision_log.rend(); ++r) {
      if (auto it = r->decision.parameters.find(p.name); it != r->decision.parameters.end()) v = it->second;
    }
    out[p.name] = v ? std::clamp(*v, p.min, p.max) : midpoint(p);
  }
  return out;
}

void Coordinator::export_decisions_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "seq,timestamp,situation,strategy,parameters,source\n";
  for (const auto& r : model_.decision_log) {
    std::string params;
    for (const auto& [k, v] : r.decision.parameters) {
      if (!params.empty()) params += ';';
      params += k + "=" + format_double(v);
    }
    out << r.seq << ',' << format_double(r.timestamp) << ',' << r.situation << ',' << r.decision.strategy << ',' << params << ','
        << to_string(r.source) << '\n';
  }
}

}  // namespace saopt
