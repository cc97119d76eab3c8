#include "saopt/store.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <mutex>

#include "saopt/rules.hpp"

namespace saopt {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double compute_hypervolume(const ValueMap& metrics, const MeasureSpecs& specs) {
  if (metrics.size() != specs.size()) throw StoreError(StoreError::Kind::KeyMismatch, "metric keys differ from the declared measures");
  double volume = 1.0;
  bool dominated = false;
  for (const auto& [name, spec] : specs) {
    auto it = metrics.find(name);
    if (it == metrics.end()) throw StoreError(StoreError::Kind::KeyMismatch, "metric '" + name + "' missing");
    if (!std::isfinite(it->second)) throw StoreError(StoreError::Kind::NonFiniteValue, "metric '" + name + "' is not finite");
    double gap = spec.higher_is_better ? it->second - spec.reference_value : spec.reference_value - it->second;
    if (gap <= 0) dominated = true;
    volume *= gap;
  }
  return dominated ? 0.0 : volume;
}

namespace {

void check_values(const ValueMap& values, const std::vector<std::pair<std::string, DataType>>& declared, const std::string& section,
                  std::vector<std::string>& errors) {
  for (const auto& [name, type] : declared) {
    auto it = values.find(name);
    if (it == values.end()) {
      errors.push_back(section + "." + name + ": missing");
    } else if (!std::isfinite(it->second)) {
      errors.push_back(section + "." + name + ": not finite");
    } else if (type == DataType::Int && std::floor(it->second) != it->second) {
      errors.push_back(section + "." + name + ": int field carries a fractional value");
    }
  }
  for (const auto& [name, v] : values) {
    bool known = std::any_of(declared.begin(), declared.end(), [&](const auto& d) { return d.first == name; });
    if (!known) errors.push_back(section + "." + name + ": not declared in the domain data model");
  }
}

}  // namespace

std::vector<std::string> observation_errors(const Observation& obs, const DomainDataModel& ddm) {
  std::vector<std::string> errors;
  if (!std::isfinite(obs.timestamp) || obs.timestamp < 0) errors.push_back("timestamp: must be finite and >= 0");
  std::vector<std::pair<std::string, DataType>> ctx, met;
  for (const auto& f : ddm.context.data) ctx.emplace_back(f.name, f.data_type);
  for (const auto& [name, m] : ddm.performance_measures) met.emplace_back(name, m.data_type);
  check_values(obs.context, ctx, "context", errors);
  check_values(obs.metrics, met, "metrics", errors);
  for (const auto& e : decision_errors(obs.input, ddm)) errors.push_back("input: " + e);
  return errors;
}

EnrichedObservation enrich(const Observation& obs, const EnrichedObservation* prev, const MeasureSpecs& specs) {
  EnrichedObservation e;
  e.base = obs;
  e.hypervolume = compute_hypervolume(obs.metrics, specs);
  if (prev) {
    if (obs.timestamp < prev->base.timestamp) throw StoreError(StoreError::Kind::NonMonotonicTimestamp, "timestamp earlier than its predecessor");
    if (obs.input == prev->base.input) e.config_active_for = prev->config_active_for + (obs.timestamp - prev->base.timestamp);
  }
  return e;
}

ObservationStore::ObservationStore(DomainDataModel ddm) : ddm_(std::move(ddm)) {}

void ObservationStore::open_log(const std::filesystem::path& path) {
  std::unique_lock lock(mutex_);
  log_.emplace(path, std::ios::app);
  if (!*log_) throw std::runtime_error("cannot open observation log '" + path.string() + "'");
}

EnrichedObservation ObservationStore::ingest(const Observation& obs) {
  auto errors = observation_errors(obs, ddm_);
  if (!errors.empty()) {
    std::string msg = "observation rejected:";
    for (const auto& e : errors) msg += " " + e + ";";
    throw StoreError(StoreError::Kind::SchemaViolation, msg);
  }
  std::unique_lock lock(mutex_);
  auto e = enrich(obs, rows_.empty() ? nullptr : &rows_.back(), ddm_.performance_measures);
  rows_.push_back(e);
  if (log_) *log_ << observation_to_json(obs) << '\n' << std::flush;
  return e;
}

std::vector<EnrichedObservation> ObservationStore::query(const QueryFilter& filter) const {
  std::shared_lock lock(mutex_);
  std::vector<EnrichedObservation> out;
  for (const auto& r : rows_) {
    if (filter.situation && r.situation != *filter.situation) continue;
    if (filter.strategy && r.base.input.strategy != *filter.strategy) continue;
    out.push_back(r);
  }
  if (filter.last_n && out.size() > *filter.last_n) out.erase(out.begin(), out.end() - static_cast<std::ptrdiff_t>(*filter.last_n));
  return out;
}

std::size_t ObservationStore::size() const {
  std::shared_lock lock(mutex_);
  return rows_.size();
}

EnrichedObservation ObservationStore::at(std::size_t index) const {
  std::shared_lock lock(mutex_);
  return rows_.at(index);
}

std::size_t ObservationStore::relabel(const std::map<SituationId, SituationId>& mapping) {
  std::unique_lock lock(mutex_);
  std::size_t changed = 0;
  for (auto& r : rows_) {
    auto it = mapping.find(r.situation);
    if (it != mapping.end() && it->second != r.situation) {
      r.situation = it->second;
      ++changed;
    }
  }
  return changed;
}

std::size_t ObservationStore::assign_situations(const std::vector<SituationId>& labels) {
  std::unique_lock lock(mutex_);
  if (labels.size() > rows_.size()) throw std::out_of_range("more labels than stored observations");
  std::size_t changed = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (rows_[i].situation != labels[i]) {
      rows_[i].situation = labels[i];
      ++changed;
    }
  }
  return changed;
}

void ObservationStore::export_csv(const std::filesystem::path& path) const {
  std::shared_lock lock(mutex_);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << "timestamp";
  for (const auto& f : ddm_.context.data) out << ',' << f.name;
  out << ",strategy";
  for (const auto& o : ddm_.parameter_options.options) out << ',' << o.name;
  for (const auto& [name, m] : ddm_.performance_measures) out << ',' << name;
  out << ",hypervolume,config_active_for,situation\n";
  for (const auto& r : rows_) {
    out << format_double(r.base.timestamp);
    for (const auto& f : ddm_.context.data) out << ',' << format_double(r.base.context.at(f.name));
    out << ',' << r.base.input.strategy;
    for (const auto& o : ddm_.parameter_options.options) {
      out << ',';
      if (auto it = r.base.input.parameters.find(o.name); it != r.base.input.parameters.end()) out << format_double(it->second);
    }
    for (const auto& [name, m] : ddm_.performance_measures) out << ',' << format_double(r.base.metrics.at(name));
    out << ',' << format_double(r.hypervolume) << ',' << format_double(r.config_active_for) << ',' << r.situation << '\n';
  }
}

std::string observation_to_json(const Observation& obs) {
  nlohmann::json j;
  j["timestamp"] = obs.timestamp;
  j["context"] = obs.context;
  j["input"] = {{"strategy", obs.input.strategy}, {"parameters", obs.input.parameters}};
  j["metrics"] = obs.metrics;
  return j.dump();
}

Observation observation_from_json(const std::string& line) {
  auto j = nlohmann::json::parse(line);
  Observation o;
  o.timestamp = j.at("timestamp").get<double>();
  o.context = j.at("context").get<ValueMap>();
  o.input.strategy = j.at("input").at("strategy").get<std::string>();
  o.input.parameters = j.at("input").at("parameters").get<ValueMap>();
  o.metrics = j.at("metrics").get<ValueMap>();
  return o;
}

std::vector<Observation> ObservationStore::read_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open observation log '" + path.string() + "'");
  std::vector<Observation> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(observation_from_json(line));
  }
  return out;
}

}  // namespace saopt
