#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "vsn/errors.hpp"
#include "vsn/harness/runner.hpp"

#include "doctest.h"

using namespace vsn;
using namespace vsn::harness;

namespace {

ScenarioConfig shortened(std::uint64_t seed, double duration_ms = 45000.0) {
  ScenarioConfig config = brushfire_scenario();
  config.seed = seed;
  config.duration_ms = duration_ms;
  return config;
}

struct WireEntry {
  std::string type;
  sim::SimTime at;
  std::string from, to, channel, tag, correlation, overlay;
  int code = -1, cf = -1;

  bool operator==(const WireEntry&) const = default;
};

// Projection of the standardized interfaces, used for differential runs.
std::vector<WireEntry> di_ci_projection(const sim::Trace& trace) {
  std::vector<WireEntry> out;
  for (const auto& e : trace.entries()) {
    if (!e.channel || (*e.channel != ChannelKind::Di && *e.channel != ChannelKind::Ci))
      continue;
    out.push_back({std::string(sim::to_string(e.type)), e.at, e.from, e.to,
                   std::string(to_string(*e.channel)), e.tag, e.correlation, e.overlay,
                   e.code, e.content_format});
  }
  return out;
}

}  // namespace

TEST_CASE("the shipped scenario validates and round-trips through JSON") {
  ScenarioConfig config = brushfire_scenario();
  validate(config);
  ScenarioConfig reloaded = config_from_json(config_to_json(config));
  validate(reloaded);
  CHECK(config_to_json(reloaded) == config_to_json(config));
}

TEST_CASE("the scenario file in the repository matches the built-in scenario") {
  ScenarioConfig from_file =
      load_scenario_file(std::string(VSN_SOURCE_DIR) + "/scenarios/brushfire.json");
  validate(from_file);
  CHECK(config_to_json(from_file) == config_to_json(brushfire_scenario()));
}

TEST_CASE("config validation rejects broken scenarios") {
  auto expect_invalid = [](ScenarioConfig config, const std::string& why) {
    INFO(why);
    try {
      validate(config);
      FAIL("expected ConfigInvalid: " << why);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ConfigInvalid);
    }
  };

  ScenarioConfig config = brushfire_scenario();
  config.nodes[3].gto = "nowhere";  // s01's gateway
  expect_invalid(config, "dangling gto reference");

  config = brushfire_scenario();
  config.nodes.push_back(config.nodes.back());
  expect_invalid(config, "duplicate node id");

  config = brushfire_scenario();
  config.tasks[0].task.app_id = "ghost-app";
  expect_invalid(config, "task without app");

  config = brushfire_scenario();
  config.overlays[0].candidates.push_back("s01");
  expect_invalid(config, "TypeA overlay candidate");

  config = brushfire_scenario();
  config.overlays[0].tasks.push_back({"home-comfort", {}});
  expect_invalid(config, "task from another app in overlay");

  config = brushfire_scenario();
  for (auto& node : config.nodes)
    if (node.id == "s01") node.max_tasks = 2;
  expect_invalid(config, "capacity exceeded by overlay plan");

  config = brushfire_scenario();
  config.monitor->trigger_task = "city-ambient";
  expect_invalid(config, "trigger task without notification policy");

  config = brushfire_scenario();
  config.duration_ms = 0;
  expect_invalid(config, "zero duration");
}

TEST_CASE("the brushfire scenario runs clean end to end") {
  RunReport report = run_scenario(shortened(42));
  CHECK(report.violations.empty());

  // Six sensors, three concurrent application tasks each.
  const auto& trace = report.results[0].trace;
  std::map<std::string, int> deploys;
  for (const auto& e : trace.entries())
    if (e.type == sim::TraceType::Local && e.tag == "pci-apply" &&
        e.correlation.rfind("deploy_task:", 0) == 0)
      ++deploys[e.correlation.substr(12)];
  for (const auto& sensor : {"s01", "s02", "s03", "s04", "s05", "s06"}) {
    INFO(sensor);
    CHECK(deploys[sensor] == 3);
  }

  // Both overlays reached Ready and produced an OCD sample each.
  CHECK(report.metrics.series(MetricKind::OCD).size() == 2);
  CHECK(report.metrics.series(MetricKind::OCD, "fire-contour-service").size() == 1);
  CHECK(report.metrics.series(MetricKind::OCD, "home-monitor").size() == 1);

  // Fire rounds ran: five repliers each, and the contour came out.
  auto fnd = report.metrics.series(MetricKind::FND, "fire-contour-service");
  CHECK(fnd.size() >= 1);
  REQUIRE(report.contour.has_value());
  CHECK(report.contour->confidence > 0.4);
  // The estimate lands in the fire's neighborhood (desk-scale sanity band).
  CHECK(std::abs(report.contour->origin.x - 150.0) < 120.0);
  CHECK(std::abs(report.contour->origin.y - 90.0) < 120.0);

  // HPD series exist per sender with the familiar shape.
  auto contexts = report.metrics.contexts(MetricKind::HPD);
  CHECK(contexts.size() >= 6);
  REQUIRE(report.hpd_mean_ms.has_value());
  REQUIRE(report.fnd_mean_ms.has_value());
  CHECK(*report.hpd_mean_ms > 15.0);
  CHECK(*report.hpd_mean_ms < 30.0);
  CHECK(report.overhead_vs_hpd_pct.has_value());

  CHECK(report.report_json["units"] == "milliseconds_simulated");
  CHECK(report.report_json["invariants"]["passed"] == true);
}

TEST_CASE("same configuration and seed give byte-identical outputs") {
  RunReport first = run_scenario(shortened(7));
  RunReport second = run_scenario(shortened(7));
  CHECK(first.events_log == second.events_log);
  CHECK(first.metrics_csv == second.metrics_csv);
  RunReport third = run_scenario(shortened(8));
  CHECK(first.events_log != third.events_log);
}

TEST_CASE("fresh-state iterations each create their overlays anew") {
  ScenarioConfig config = shortened(11, 30000.0);
  config.iterations = 3;
  RunReport report = run_scenario(config);
  CHECK(report.violations.empty());
  CHECK(report.metrics.series(MetricKind::OCD).size() == 6);  // 2 overlays x 3 runs
  for (int i = 0; i < 3; ++i)
    CHECK(report.metrics.series(MetricKind::OCD, "", i).size() == 2);
}

TEST_CASE("swapping every proprietary dialect changes no Di or Ci bytes") {
  RunReport base = run_scenario(shortened(21));
  ScenarioConfig flipped = shortened(21);
  for (auto& node : flipped.nodes)
    node.dialect = node.dialect == agent::Dialect::KeyValueText
                       ? agent::Dialect::CompactBinary
                       : agent::Dialect::KeyValueText;
  RunReport swapped = run_scenario(flipped);
  CHECK(di_ci_projection(base.results[0].trace) ==
        di_ci_projection(swapped.results[0].trace));
}

TEST_CASE("a SetPriority command on sensor 02 reorders its emissions") {
  ScenarioConfig config = shortened(42, 100000.0);  // script runs at t = 60 s
  RunReport report = run_scenario(config);
  CHECK(report.violations.empty());

  // The Ci response to the scripted command is a 2.04.
  bool acked = false;
  for (const auto& e : report.results[0].trace.entries())
    if (e.type == sim::TraceType::Deliver && e.tag == "ci-resp" &&
        e.to == "city-admin" && e.code == 0x44)
      acked = true;
  CHECK(acked);

  // Same-instant emission pairs on s02: fire first before the change,
  // ambient first after (equal priority ties break by task id).
  std::vector<std::pair<sim::SimTime, std::string>> emissions;
  for (const auto& e : report.results[0].trace.entries())
    if (e.type == sim::TraceType::Local && e.tag == "emit" && e.to == "s02")
      emissions.emplace_back(e.at, e.correlation.substr(0, e.correlation.find(':')));
  int fire_first_before = 0, ambient_first_after = 0, wrong = 0;
  for (std::size_t i = 0; i + 1 < emissions.size(); ++i) {
    if (emissions[i].first != emissions[i + 1].first) continue;
    const std::string& a = emissions[i].second;
    const std::string& b = emissions[i + 1].second;
    if (a == b) continue;
    bool pair_has_both = (a == "city-fire" || b == "city-fire") &&
                         (a == "city-ambient" || b == "city-ambient");
    if (!pair_has_both) continue;
    if (emissions[i].first < sim::ms(60000)) {
      if (a == "city-fire") ++fire_first_before;
      else ++wrong;
    } else {
      if (a == "city-ambient") ++ambient_first_after;
      else ++wrong;
    }
  }
  CHECK(fire_first_before >= 3);
  CHECK(ambient_first_after >= 3);
  CHECK(wrong == 0);
}

TEST_CASE("baseline mode measures the no-virtualization round directly") {
  ScenarioConfig virtualized = shortened(33);
  RunReport virt = run_scenario(virtualized);

  ScenarioConfig baseline_config = shortened(33);
  baseline_config.baseline_mode = true;
  RunReport base = run_scenario(baseline_config);

  CHECK(base.violations.empty());
  CHECK(base.report_json["mode"] == "baseline");
  auto baseline_fnd = base.metrics.series(MetricKind::FND, "baseline");
  CHECK(baseline_fnd.size() >= 1);
  CHECK(base.metrics.series(MetricKind::OCD).empty());  // no overlays at all

  REQUIRE(virt.fnd_mean_ms.has_value());
  REQUIRE(base.fnd_mean_ms.has_value());
  double overhead = overhead_pct(*virt.fnd_mean_ms, *base.fnd_mean_ms);
  CHECK(std::isfinite(overhead));
  CHECK(overhead > 0.0);  // the overlay hop costs something

  // Baseline sensors run exactly one task: no node-level virtualization.
  std::map<std::string, int> deploys;
  for (const auto& e : base.results[0].trace.entries())
    if (e.type == sim::TraceType::Local && e.tag == "pci-apply" &&
        e.correlation.rfind("deploy_task:", 0) == 0)
      ++deploys[e.correlation.substr(12)];
  for (const auto& [node, count] : deploys) CHECK(count == 1);
}

TEST_CASE("the offline contour tool reproduces a contour from the event log") {
  RunReport report = run_scenario(shortened(42, 90000.0));
  REQUIRE(report.contour.has_value());
  std::istringstream log(report.events_log);
  auto offline = contour_from_eventlog(log);
  CHECK(offline.contains("origin"));
  CHECK(offline["sectors"].size() == 12);
  CHECK(std::abs(offline["origin"]["x"].get<double>() - 150.0) < 150.0);
}

TEST_CASE("write_outputs produces the documented artifact set") {
  RunReport report = run_scenario(shortened(5, 30000.0));
  std::string out_dir = "vsn-test-out";
  write_outputs(report, out_dir, "csv");
  for (const char* name : {"metrics.csv", "events.log", "report.json", "registry.json"}) {
    std::ifstream file(out_dir + "/" + name);
    INFO(name);
    CHECK(file.good());
  }
  std::ifstream metrics(out_dir + "/metrics.csv");
  std::string header;
  std::getline(metrics, header);
  CHECK(header == "kind,iteration,context,value_ms");
  std::filesystem::remove_all(out_dir);
}
