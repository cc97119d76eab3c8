// Experiment harness: closed-loop runs, baselines, reports and a standalone
// framework server.

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <thread>

#include "saopt/harness.hpp"
#include "saopt/http.hpp"
#include "saopt/store.hpp"

namespace fs = std::filesystem;
using namespace saopt;
using namespace saopt::harness;

namespace {

std::atomic<bool> g_stop{false};

void write_cell(const std::vector<RunResult>& runs, const fs::path& dir) {
  auto cells = summarize(runs);
  write_summary_csv(cells, dir / "summary.csv");
  for (const auto& c : cells) {
    std::cout << c.label << ": AUC " << format_double(c.final_auc.mean) << " +- " << format_double(c.final_auc.std) << ", HV "
              << format_double(c.metrics.at("hypervolume").mean) << " over " << c.seeds.size() << " seed(s)\n";
  }
}

int cmd_run(const fs::path& ddm, const fs::path& scenario, const std::string& detection, const std::string& trigger,
            const std::vector<std::uint64_t>& seeds, const std::string& baseline, const std::string& transport, const fs::path& out) {
  std::optional<DetectionAlgorithm> det;
  std::optional<TriggerMethod> trig;
  std::optional<Baseline> base;
  if (!baseline.empty()) {
    base = baseline_from_string(baseline);
    if (!base) throw CLI::ValidationError("--baseline", "unknown baseline '" + baseline + "'");
  } else {
    // Detection and trigger flags only matter for framework runs.
    if (!detection.empty() && !(det = detection_algorithm_from_string(detection))) {
      throw CLI::ValidationError("--detection", "unknown algorithm '" + detection + "'");
    }
    if (!trigger.empty() && !(trig = trigger_method_from_string(trigger))) {
      throw CLI::ValidationError("--trigger", "unknown trigger '" + trigger + "'");
    }
  }
  const Setup setup = load_setup(ddm, scenario, det, trig);
  const Transport via = transport == "http" ? Transport::Http : Transport::InProcess;

  std::vector<RunResult> runs;
  fs::path cell_dir;
  for (auto seed : seeds) {
    RunResult r = base ? run_baseline(setup, *base, seed) : run_framework(setup, seed, via);
    cell_dir = out / r.label;
    write_run(r, cell_dir / ("seed-" + std::to_string(seed)));
    runs.push_back(std::move(r));
  }
  write_cell(runs, cell_dir);
  return 0;
}

int cmd_report(const std::vector<fs::path>& roots, const fs::path& out) {
  std::vector<RunResult> runs;
  for (const auto& root : roots) {
    for (const auto& dir : find_runs(root)) runs.push_back(read_run(dir));
  }
  if (runs.empty()) throw IncompatibleRuns("no runs found");
  auto cells = summarize(runs);
  fs::create_directories(out);
  write_summary_csv(cells, out / "summary.csv");
  write_auc_csv(cells, out / "auc.csv");
  write_auc_svg(cells, out / "auc.svg");
  for (const auto& c : cells) {
    std::cout << c.label << ": AUC " << format_double(c.final_auc.mean) << " +- " << format_double(c.final_auc.std) << '\n';
  }
  return 0;
}

int cmd_serve(const fs::path& ddm_path, const std::string& host, int port, std::uint64_t seed) {
  DomainDataModel ddm = load_ddm(ddm_path.string());
  const fs::path dir = ddm_path.parent_path();
  auto fallback = load_fallback_rules((dir / ddm.use_case.fallback_rules).string());
  validate_fallback_rules(fallback, ddm);
  std::optional<SituationRuleSet> rules;
  if (ddm.context.situation_detection.algorithm == DetectionAlgorithm::RuleBased) {
    rules = load_situation_rules((dir / ddm.context.situation_detection.text("rules")).string());
  }
  CoordinatorOptions options;
  options.seed = seed;
  AdaptationService service(std::make_unique<Coordinator>(ddm, fallback, rules, options), true);
  HttpServer server(service, host, port);
  std::cout << "listening on " << host << ':' << server.port() << std::endl;
  std::signal(SIGINT, [](int) { g_stop = true; });
  std::signal(SIGTERM, [](int) { g_stop = true; });
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(200));
  server.stop();
  service.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Situation-aware strategy selection and parameter optimization harness"};
  app.require_subcommand(1);

  fs::path ddm, scenario, out;
  std::string detection, trigger, baseline, transport = "inprocess";
  std::vector<std::uint64_t> seeds{1};
  auto* run = app.add_subcommand("run", "Run one experiment cell (framework or baseline) over seeds");
  run->add_option("--ddm", ddm, "Domain-Data-Model file")->required();
  run->add_option("--scenario", scenario, "Scenario file")->required();
  run->add_option("--detection", detection, "RuleBased, OPTICS, DBSCAN or kMeans");
  run->add_option("--trigger", trigger, "hypervolume or threshold");
  run->add_option("--seeds", seeds, "Comma separated seeds")->delimiter(',');
  run->add_option("--baseline", baseline, "BestDistance, BestVelocity or Rules");
  run->add_option("--transport", transport, "inprocess or http")->check(CLI::IsMember({"inprocess", "http"}));
  run->add_option("--out", out, "Output directory")->required();

  std::vector<fs::path> runs;
  fs::path report_out;
  auto* report = app.add_subcommand("report", "Summaries, AUC series and plot from finished runs");
  report->add_option("--runs", runs, "Run directories (searched recursively)")->required();
  report->add_option("--out", report_out, "Output directory")->required();

  fs::path serve_ddm;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::uint64_t serve_seed = 1;
  auto* serve = app.add_subcommand("serve", "Serve the framework over HTTP for an external use case");
  serve->add_option("--ddm", serve_ddm, "Domain-Data-Model file")->required();
  serve->add_option("--host", host);
  serve->add_option("--port", port);
  serve->add_option("--seed", serve_seed);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(ddm, scenario, detection, trigger, seeds, baseline, transport, out);
    if (*report) return cmd_report(runs, report_out);
    if (*serve) return cmd_serve(serve_ddm, host, port, serve_seed);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const ConfigNotFound& e) {
    std::cerr << "ConfigNotFound: " << e.what() << '\n';
    return 2;
  } catch (const SimulationDiverged& e) {
    std::cerr << "SimulationDiverged: " << e.what() << '\n';
    return 3;
  } catch (const IncompatibleRuns& e) {
    std::cerr << "IncompatibleRuns: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
