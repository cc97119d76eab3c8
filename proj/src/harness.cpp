#include "saopt/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <memory>
#include <numeric>
#include <set>
#include <sstream>

#include "saopt/adapter.hpp"
#include "saopt/http.hpp"
#include "saopt/store.hpp"

namespace saopt::harness {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Baseline b) {
  switch (b) {
    case Baseline::BestDistance: return "BestDistance";
    case Baseline::BestVelocity: return "BestVelocity";
    case Baseline::Rules: return "Rules";
  }
  return "?";
}

std::optional<Baseline> baseline_from_string(std::string_view name) {
  for (auto b : {Baseline::BestDistance, Baseline::BestVelocity, Baseline::Rules}) {
    if (to_string(b) == name) return b;
  }
  return std::nullopt;
}

AdaptationDecision baseline_decision(Baseline b) {
  switch (b) {
    case Baseline::BestDistance: return {"BestDistance", {{"advertising_duration", 10}, {"max_speed_difference", 35}}};
    case Baseline::BestVelocity:
      return {"BestVelocity", {{"advertising_duration", 10}, {"search_distance_front", 600}, {"search_distance_back", 250}}};
    case Baseline::Rules: break;
  }
  throw std::invalid_argument("the rule baseline has no fixed decision");
}

SituationDetectionSettings detection_preset(DetectionAlgorithm algorithm, const SituationDetectionSettings& current) {
  if (algorithm == current.algorithm) return current;
  SituationDetectionSettings s;
  s.algorithm = algorithm;
  switch (algorithm) {
    case DetectionAlgorithm::RuleBased: s.settings = {{"rules", std::string("situation_rules.yaml")}}; break;
    case DetectionAlgorithm::OPTICS: s.settings = {{"min_samples", 20.0}, {"min_cluster_size", 60.0}, {"xi", 0.05}}; break;
    case DetectionAlgorithm::DBSCAN: s.settings = {{"eps", 0.25}, {"min_samples", 20.0}}; break;
    case DetectionAlgorithm::KMeans: s.settings = {{"k_min", 1.0}, {"k_max", 5.0}}; break;
  }
  return s;
}

namespace {

fs::path existing(const fs::path& p, const std::string& what) {
  if (!fs::is_regular_file(p)) throw ConfigNotFound(what + " not found: " + p.string());
  return p;
}

void check_finite(const Observation& obs) {
  auto bad = [](const ValueMap& m) { return std::any_of(m.begin(), m.end(), [](const auto& kv) { return !std::isfinite(kv.second); }); };
  if (!std::isfinite(obs.timestamp) || bad(obs.context) || bad(obs.metrics)) {
    throw SimulationDiverged("non-finite value in the observation at t=" + format_double(obs.timestamp));
  }
}

// Drives the simulator one observation window at a time.
class Loop {
 public:
  Loop(const Setup& setup, std::uint64_t seed)
      : setup_(setup), sim_(setup.scenario, seed), executor_(sim_), steps_(static_cast<int>(std::lround(setup.scenario.observation_window / setup.scenario.dt))) {}

  Observation next() {
    raw_.clear();
    for (int i = 0; i < steps_; ++i) raw_.push_back(sim_.step());
    Observation obs = preprocess_(raw_, setup_.scenario.observation_window, executor_.active());
    check_finite(obs);
    return obs;
  }

  void apply(const AdaptationDecision& d) { executor_.execute(d); }
  std::size_t windows() const { return setup_.scenario.observations(); }

 private:
  const Setup& setup_;
  platoon::Simulator sim_;
  PlatoonExecutor executor_;
  Preprocessor preprocess_;
  int steps_;
  std::vector<platoon::RawMonitoringRecord> raw_;
};

RunResult empty_result(const Setup& setup, std::string label, std::uint64_t seed) {
  RunResult r;
  r.label = std::move(label);
  r.scenario = setup.scenario.name;
  r.seed = seed;
  r.window = setup.scenario.observation_window;
  for (const auto& f : setup.ddm.context.data) r.context_fields.push_back(f.name);
  for (const auto& [name, spec] : setup.ddm.performance_measures) r.metric_names.push_back(name);
  return r;
}

// Use-case side of the framework connection.
class Link {
 public:
  virtual ~Link() = default;
  virtual void send(const Observation& obs) = 0;
  // Newest decision after the framework has handled `processed` observations.
  virtual AdaptationSnapshot after(std::size_t processed) = 0;
};

class InProcessLink : public Link {
 public:
  explicit InProcessLink(AdaptationService& s) : service_(s) {}
  void send(const Observation& obs) override {
    auto ack = service_.ingest(obs);
    if (!ack.accepted) throw std::runtime_error("framework rejected an observation: " + ack.errors.front());
  }
  AdaptationSnapshot after(std::size_t) override { return service_.latest(); }

 private:
  AdaptationService& service_;
};

class HttpLink : public Link {
 public:
  explicit HttpLink(int port) : client_("127.0.0.1", port) {}
  void send(const Observation& obs) override {
    auto ack = client_.post_observation(obs);
    if (!ack.accepted) throw std::runtime_error("framework rejected an observation: " + ack.errors.front());
  }
  AdaptationSnapshot after(std::size_t processed) override { return client_.adaptation_after(processed); }

 private:
  HttpClient client_;
};

}  // namespace

Setup load_setup(const fs::path& ddm_path, const fs::path& scenario_path, std::optional<DetectionAlgorithm> detection,
                 std::optional<TriggerMethod> trigger) {
  Setup s;
  s.ddm = load_ddm(existing(ddm_path, "DDM").string());
  s.scenario = platoon::load_scenario(existing(scenario_path, "scenario").string());
  if (detection) s.ddm.context.situation_detection = detection_preset(*detection, s.ddm.context.situation_detection);
  if (trigger) {
    s.ddm.parameter_options.strategy_selection.method = *trigger;
    if (*trigger == TriggerMethod::Threshold) {
      for (const auto& [name, m] : s.ddm.performance_measures) {
        if (!m.threshold_value) throw DdmError(DdmErrorKind::MissingThresholdValue, "performance_measures." + name + ".threshold_value", "needed by the threshold trigger");
      }
    } else if (!s.ddm.selection().hypervolume_threshold) {
      throw DdmError(DdmErrorKind::MissingAlgorithmSetting, "parameter_options.strategy_selection_settings.hypervolume_threshold", "needed by the hypervolume trigger");
    }
  }
  const fs::path dir = ddm_path.parent_path();
  s.fallback = load_fallback_rules(existing(dir / s.ddm.use_case.fallback_rules, "fallback rules").string());
  validate_fallback_rules(s.fallback, s.ddm);
  s.fallback.check_fields(s.ddm.context);
  const auto& det = s.ddm.context.situation_detection;
  if (det.algorithm == DetectionAlgorithm::RuleBased) {
    s.situation_rules = load_situation_rules(existing(dir / det.text("rules"), "situation rules").string());
  }
  return s;
}

std::string framework_label(const DomainDataModel& ddm) {
  return std::string(to_string(ddm.context.situation_detection.algorithm)) + "-" + std::string(to_string(ddm.selection().method));
}

RunResult run_framework(const Setup& setup, std::uint64_t seed, Transport transport) {
  RunResult result = empty_result(setup, framework_label(setup.ddm), seed);
  CoordinatorOptions options;
  options.seed = seed;
  AdaptationService service(std::make_unique<Coordinator>(setup.ddm, setup.fallback, setup.situation_rules, options),
                            transport == Transport::Http);
  std::unique_ptr<HttpServer> server;
  std::unique_ptr<Link> link;
  if (transport == Transport::Http) {
    server = std::make_unique<HttpServer>(service);
    link = std::make_unique<HttpLink>(server->port());
  } else {
    link = std::make_unique<InProcessLink>(service);
  }

  Loop loop(setup, seed);
  AdaptationSnapshot current = link->after(0);
  loop.apply(current.decision);
  for (std::size_t w = 0; w < loop.windows(); ++w) {
    Observation obs = loop.next();
    link->send(obs);
    AdaptationSnapshot snap = link->after(w + 1);
    result.rows.push_back({obs, compute_hypervolume(obs.metrics, setup.ddm.performance_measures), kNoise});
    if (snap.seq != current.seq) {
      current = snap;
      loop.apply(current.decision);
    }
  }
  if (server) server->stop();
  service.stop();

  const Coordinator& c = service.coordinator();
  const auto& first = c.first_assigned();
  for (std::size_t i = 0; i < result.rows.size() && i < first.size(); ++i) result.rows[i].situation = first[i];
  result.decisions = c.model().decision_log;
  result.store_size = c.store().size();
  return result;
}

RunResult run_baseline(const Setup& setup, Baseline baseline, std::uint64_t seed) {
  RunResult result = empty_result(setup, std::string(to_string(baseline)), seed);
  Loop loop(setup, seed);
  AdaptationDecision active;
  if (baseline == Baseline::Rules) {
    if (!setup.fallback.otherwise) throw std::invalid_argument("rule baseline needs a default rule");
    active = *setup.fallback.otherwise;
  } else {
    active = baseline_decision(baseline);
  }
  loop.apply(active);
  for (std::size_t w = 0; w < loop.windows(); ++w) {
    Observation obs = loop.next();
    result.rows.push_back({obs, compute_hypervolume(obs.metrics, setup.ddm.performance_measures), kNoise});
    if (baseline == Baseline::Rules) {
      auto d = setup.fallback.match(obs.context);
      if (d && !(*d == active)) {
        active = *d;
        loop.apply(active);
      }
    }
  }
  return result;
}

std::vector<double> auc_series(const std::vector<double>& times, const std::vector<double>& values) {
  if (times.size() != values.size()) throw std::invalid_argument("auc_series: size mismatch");
  std::vector<double> out(times.size(), 0.0);
  for (std::size_t i = 1; i < times.size(); ++i) out[i] = out[i - 1] + 0.5 * (values[i] + values[i - 1]) * (times[i] - times[i - 1]);
  return out;
}

namespace {

std::string params_text(const ParameterSetting& p) {
  std::string s;
  for (const auto& [k, v] : p) {
    if (!s.empty()) s += ';';
    s += k + '=' + format_double(v);
  }
  return s;
}

ParameterSetting parse_params(const std::string& text) {
  ParameterSetting p;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    auto eq = item.find('=');
    if (eq == std::string::npos) throw std::runtime_error("bad parameter entry '" + item + "'");
    p[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
  }
  return p;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void write_run(const RunResult& run, const fs::path& dir) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "observations.csv");
    out << "timestamp";
    for (const auto& f : run.context_fields) out << ',' << f;
    out << ",strategy,parameters";
    for (const auto& m : run.metric_names) out << ',' << m;
    out << ",hypervolume,situation\n";
    for (const auto& r : run.rows) {
      out << format_double(r.obs.timestamp);
      for (const auto& f : run.context_fields) out << ',' << format_double(r.obs.context.at(f));
      out << ',' << r.obs.input.strategy << ',' << params_text(r.obs.input.parameters);
      for (const auto& m : run.metric_names) out << ',' << format_double(r.obs.metrics.at(m));
      out << ',' << format_double(r.hypervolume) << ',' << r.situation << '\n';
    }
  }
  {
    std::ofstream out(dir / "decisions.csv");
    out << "seq,round,timestamp,situation,strategy,parameters,source\n";
    for (const auto& d : run.decisions) {
      out << d.seq << ',' << d.round << ',' << format_double(d.timestamp) << ',' << d.situation << ',' << d.decision.strategy << ','
          << params_text(d.decision.parameters) << ',' << to_string(d.source) << '\n';
    }
  }
  json meta{{"label", run.label},
            {"scenario", run.scenario},
            {"seed", run.seed},
            {"window", run.window},
            {"observations", run.rows.size()},
            {"decisions", run.decisions.size()},
            {"store_size", run.store_size},
            {"context", run.context_fields},
            {"metrics", run.metric_names}};
  std::ofstream(dir / "run.json") << meta.dump(2) << '\n';
}

RunResult read_run(const fs::path& dir) {
  std::ifstream meta_in(existing(dir / "run.json", "run metadata"));
  const json meta = json::parse(meta_in);
  RunResult run;
  run.label = meta.at("label").get<std::string>();
  run.scenario = meta.at("scenario").get<std::string>();
  run.seed = meta.at("seed").get<std::uint64_t>();
  run.window = meta.at("window").get<double>();
  run.store_size = meta.at("store_size").get<std::size_t>();
  run.context_fields = meta.at("context").get<std::vector<std::string>>();
  run.metric_names = meta.at("metrics").get<std::vector<std::string>>();

  std::ifstream in(existing(dir / "observations.csv", "observation log"));
  std::string line;
  std::getline(in, line);
  const std::size_t nc = run.context_fields.size(), nm = run.metric_names.size();
  const std::size_t columns = 1 + nc + 2 + nm + 2;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != columns) throw std::runtime_error(dir.string() + ": malformed observation row");
    RunRow r;
    std::size_t k = 0;
    r.obs.timestamp = std::stod(cells[k++]);
    for (const auto& f : run.context_fields) r.obs.context[f] = std::stod(cells[k++]);
    r.obs.input.strategy = cells[k++];
    r.obs.input.parameters = parse_params(cells[k++]);
    for (const auto& m : run.metric_names) r.obs.metrics[m] = std::stod(cells[k++]);
    r.hypervolume = std::stod(cells[k++]);
    r.situation = std::stoi(cells[k++]);
    run.rows.push_back(std::move(r));
  }
  return run;
}

std::vector<fs::path> find_runs(const fs::path& root) {
  std::vector<fs::path> out;
  if (!fs::exists(root)) throw ConfigNotFound("run directory not found: " + root.string());
  if (fs::is_regular_file(root / "run.json")) out.push_back(root);
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_directory() && fs::is_regular_file(e.path() / "run.json")) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

Stat describe(const std::vector<double>& xs) {
  Stat s;
  if (xs.empty()) return s;
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(xs.size()));
  auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  s.min = *lo;
  s.max = *hi;
  // Rounding can push the mean a hair outside the sample range.
  s.mean = std::clamp(s.mean, s.min, s.max);
  return s;
}

std::vector<CellSummary> summarize(const std::vector<RunResult>& runs) {
  if (runs.empty()) throw IncompatibleRuns("no runs to summarize");
  std::vector<double> times;
  for (const auto& r : runs.front().rows) times.push_back(r.obs.timestamp);
  for (const auto& run : runs) {
    if (run.scenario != runs.front().scenario) throw IncompatibleRuns("runs mix scenarios '" + run.scenario + "' and '" + runs.front().scenario + "'");
    if (run.rows.size() != times.size()) {
      throw IncompatibleRuns("run '" + run.label + "' seed " + std::to_string(run.seed) + " has " + std::to_string(run.rows.size()) +
                             " observations, expected " + std::to_string(times.size()));
    }
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (run.rows[i].obs.timestamp != times[i]) throw IncompatibleRuns("observation times differ between runs");
    }
  }

  std::vector<std::string> order;
  std::map<std::string, std::vector<const RunResult*>> groups;
  for (const auto& run : runs) {
    if (!groups.count(run.label)) order.push_back(run.label);
    groups[run.label].push_back(&run);
  }

  std::vector<CellSummary> cells;
  for (const auto& label : order) {
    CellSummary cell;
    cell.label = label;
    cell.times = times;
    cell.mean_auc.assign(times.size(), 0.0);
    std::map<std::string, std::vector<double>> per_run;
    std::vector<double> finals;
    const auto& members = groups[label];
    for (const RunResult* run : members) {
      cell.seeds.push_back(run->seed);
      std::vector<double> hv;
      std::map<std::string, double> sums;
      for (const auto& r : run->rows) {
        hv.push_back(r.hypervolume);
        for (const auto& [k, v] : r.obs.metrics) sums[k] += v;
        sums["hypervolume"] += r.hypervolume;
      }
      const double n = std::max<double>(1.0, static_cast<double>(run->rows.size()));
      for (const auto& [k, v] : sums) per_run[k].push_back(v / n);
      auto auc = auc_series(times, hv);
      for (std::size_t i = 0; i < auc.size(); ++i) cell.mean_auc[i] += auc[i] / static_cast<double>(members.size());
      finals.push_back(auc.empty() ? 0.0 : auc.back());
    }
    for (const auto& [k, xs] : per_run) cell.metrics[k] = describe(xs);
    cell.final_auc = describe(finals);
    cells.push_back(std::move(cell));
  }
  return cells;
}

void write_summary_csv(const std::vector<CellSummary>& cells, const fs::path& path) {
  std::ofstream out(path);
  std::vector<std::string> keys;
  if (!cells.empty()) {
    for (const auto& [k, s] : cells.front().metrics) {
      if (k != "hypervolume") keys.push_back(k);
    }
    keys.push_back("hypervolume");
  }
  out << "configuration,runs";
  for (const auto& k : keys) out << ',' << k << "_mean," << k << "_std";
  out << ",auc_mean,auc_std\n";
  for (const auto& c : cells) {
    out << c.label << ',' << c.seeds.size();
    for (const auto& k : keys) {
      auto it = c.metrics.find(k);
      Stat s = it == c.metrics.end() ? Stat{} : it->second;
      out << ',' << format_double(s.mean) << ',' << format_double(s.std);
    }
    out << ',' << format_double(c.final_auc.mean) << ',' << format_double(c.final_auc.std) << '\n';
  }
}

void write_auc_csv(const std::vector<CellSummary>& cells, const fs::path& path) {
  std::ofstream out(path);
  out << "time";
  for (const auto& c : cells) out << ',' << c.label;
  out << '\n';
  if (cells.empty()) return;
  for (std::size_t i = 0; i < cells.front().times.size(); ++i) {
    out << format_double(cells.front().times[i]);
    for (const auto& c : cells) out << ',' << format_double(c.mean_auc[i]);
    out << '\n';
  }
}

void write_auc_svg(const std::vector<CellSummary>& cells, const fs::path& path) {
  const double W = 800, H = 480, left = 70, right = 200, top = 20, bottom = 50;
  const double pw = W - left - right, ph = H - top - bottom;
  double tmax = 1.0, amax = 1.0;
  for (const auto& c : cells) {
    if (!c.times.empty()) tmax = std::max(tmax, c.times.back());
    for (double a : c.mean_auc) amax = std::max(amax, a);
  }
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f", "#17becf"};
  std::ofstream out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double y = top + ph - ph * i / 4.0;
    const double x = left + pw * i / 4.0;
    out << "<text x=\"" << left - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << std::lround(amax * i / 4.0) << "</text>\n";
    out << "<text x=\"" << x << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">" << format_double(std::round(tmax * i / 4.0 / 360.0) / 10.0)
        << "</text>\n";
  }
  out << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">simulation time [h]</text>\n";
  out << "<text transform=\"translate(16," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">hypervolume AUC</text>\n";
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const auto& c = cells[k];
    const char* color = colors[k % (sizeof colors / sizeof *colors)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    const std::size_t stride = std::max<std::size_t>(1, c.times.size() / 400);
    for (std::size_t i = 0; i < c.times.size(); i += stride) {
      out << left + pw * c.times[i] / tmax << ',' << top + ph - ph * c.mean_auc[i] / amax << ' ';
    }
    out << "\"/>\n";
    const double ly = top + 16 * (k + 1);
    out << "<line x1=\"" << W - right + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << W - right + 30 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << W - right + 36 << "\" y=\"" << ly << "\">" << c.label << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace saopt::harness
