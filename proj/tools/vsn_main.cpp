#include <fstream>
#include <iostream>

#include "vsn/errors.hpp"
#include "vsn/harness/config.hpp"
#include "vsn/harness/runner.hpp"

#include "CLI11.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitViolation = 1;
constexpr int kExitConfig = 2;

int cmd_run(const std::string& scenario_path, std::uint64_t seed, int iterations,
            bool baseline, const std::string& out_dir, const std::string& format,
            bool seed_set, bool iterations_set) {
  using namespace vsn;
  harness::ScenarioConfig config = scenario_path.empty()
                                       ? harness::brushfire_scenario()
                                       : harness::load_scenario_file(scenario_path);
  if (seed_set) config.seed = seed;
  if (iterations_set) config.iterations = iterations;
  if (baseline) config.baseline_mode = true;

  harness::RunReport report = harness::run_scenario(config);
  if (!out_dir.empty()) harness::write_outputs(report, out_dir, format);

  std::cout << "scenario: " << report.scenario_name << " (seed " << report.seed << ", "
            << report.iterations << " iteration(s), "
            << (report.baseline ? "baseline" : "virtualized") << ")\n";
  std::cout << "metric samples: " << report.metrics.samples().size()
            << " (times are simulated milliseconds)\n";
  auto print_mean = [](const char* name, const std::optional<double>& value) {
    if (value) std::cout << "  " << name << " mean: " << *value << " ms (simulated)\n";
  };
  print_mean("HPD", report.hpd_mean_ms);
  print_mean("OCD", report.ocd_mean_ms);
  print_mean("FND", report.fnd_mean_ms);
  if (report.overhead_vs_hpd_pct)
    std::cout << "  overhead vs HPD: " << *report.overhead_vs_hpd_pct << " %\n";
  if (report.contour)
    std::cout << "contour: origin (" << report.contour->origin.x << ", "
              << report.contour->origin.y << "), confidence " << report.contour->confidence
              << "\n";
  if (!out_dir.empty()) std::cout << "outputs written to " << out_dir << "\n";

  if (!report.passed()) {
    std::cout << "invariant violations:\n";
    for (const auto& violation : report.violations) std::cout << "  " << violation << "\n";
    return kExitViolation;
  }
  std::cout << "all invariants passed\n";
  return kExitOk;
}

int cmd_validate(const std::string& scenario_path) {
  vsn::harness::ScenarioConfig config = vsn::harness::load_scenario_file(scenario_path);
  vsn::harness::validate(config);
  std::cout << "scenario ok: " << config.name << " (" << config.nodes.size() << " nodes, "
            << config.tasks.size() << " tasks, " << config.overlays.size()
            << " overlays)\n";
  return kExitOk;
}

int cmd_contour(const std::string& in_path, const std::string& out_path) {
  std::ifstream in(in_path);
  if (!in) vsn::fail(vsn::ErrorCode::ConfigInvalid, "cannot open " + in_path);
  auto contour = vsn::harness::contour_from_eventlog(in);
  if (out_path.empty()) {
    std::cout << contour.dump(2) << "\n";
  } else {
    std::ofstream out(out_path, std::ios::binary);
    out << contour.dump(2) << "\n";
    std::cout << "contour written to " << out_path << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"virtualized sensor network simulator"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir, format = "csv", in_path, out_path;
  std::uint64_t seed = 0;
  int iterations = 1;
  bool baseline = false;

  auto* run = app.add_subcommand("run", "run a scenario and write metrics/reports");
  run->add_option("--scenario", scenario_path,
                  "scenario JSON (defaults to the built-in brushfire scenario)");
  auto* seed_opt = run->add_option("--seed", seed, "base RNG seed");
  auto* iter_opt = run->add_option("--iterations", iterations, "fresh-state repetitions");
  run->add_flag("--baseline", baseline,
                "no-virtualization comparison mode (direct gateway computation)");
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--format", format, "metrics file format: csv|json")
      ->check(CLI::IsMember({"csv", "json"}));

  auto* validate = app.add_subcommand("validate", "validate a scenario file");
  validate->add_option("--scenario", scenario_path, "scenario JSON")->required();

  auto* contour = app.add_subcommand("contour", "recompute the contour from an event log");
  contour->add_option("--in", in_path, "events.log produced by run")->required();
  contour->add_option("--out", out_path, "output JSON path (stdout if omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(scenario_path, seed, iterations, baseline, out_dir, format,
                     seed_opt->count() > 0, iter_opt->count() > 0);
    if (validate->parsed()) return cmd_validate(scenario_path);
    if (contour->parsed()) return cmd_contour(in_path, out_path);
  } catch (const vsn::Error& error) {
    std::cerr << "error: " << error.what() << "\n";
    return error.code() == vsn::ErrorCode::ConfigInvalid ? kExitConfig : kExitViolation;
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << "\n";
    return kExitViolation;
  }
  return kExitOk;
}
