#include "vsn/harness/runner.hpp"

#include <filesystem>
#include <fstream>
#include <istream>
#include <memory>
#include <sstream>

#include "vsn/errors.hpp"
#include "vsn/harness/machines.hpp"
#include "vsn/logging.hpp"

namespace vsn::harness {

using nlohmann::json;

namespace {

sim::Duration micros(double ms) { return static_cast<sim::Duration>(ms * 1000.0); }

struct IterationMachines {
  std::map<sim::NodeId, std::unique_ptr<SensorMachine>> sensors;
  std::map<sim::NodeId, std::unique_ptr<HostMachine>> hosts;
  std::map<sim::NodeId, std::unique_ptr<AppMachine>> apps;
};

json roster_preamble(const ScenarioConfig& config, const RunContext& ctx) {
  json sensors = json::array();
  for (const auto& id : ctx.fire_sensors) {
    for (const auto& node : config.nodes)
      if (node.id == id)
        sensors.push_back({{"id", id}, {"x", node.x}, {"y", node.y}});
  }
  json out = {{"sensors", sensors}};
  if (config.monitor)
    out["fca"] = {{"lambda_max", config.monitor->lambda_max},
                  {"radius_m", config.monitor->radius_m},
                  {"window_ms", config.monitor->window_ms},
                  {"sectors", config.monitor->sectors}};
  return out;
}

}  // namespace

RunReport run_scenario(const ScenarioConfig& config) {
  validate(config);

  RunReport report;
  report.scenario_name = config.name;
  report.seed = config.seed;
  report.iterations = config.iterations;
  report.baseline = config.baseline_mode;

  std::string preamble;
  for (int iteration = 0; iteration < config.iterations; ++iteration) {
    sim::Simulator simulator;
    phys::World world;
    reg::Registry registry;

    RunContext ctx;
    ctx.simulator = &simulator;
    ctx.world = &world;
    ctx.registry = &registry;
    ctx.metrics = &report.metrics;
    ctx.config = &config;
    ctx.iteration = iteration;
    ctx.run_seed = config.seed + static_cast<std::uint64_t>(iteration);

    // Physical world.
    world.environment().ambient_c = config.environment.ambient_c;
    if (config.environment.fire) {
      const auto& f = *config.environment.fire;
      world.environment().fire =
          phys::Fire{{f.x, f.y}, micros(f.start_ms), f.intensity_c, f.falloff_radius_m};
    }
    for (const auto& node : config.nodes) {
      phys::PhysicalNode physical;
      physical.id = node.id;
      physical.kind = node.kind;
      physical.position = {node.x, node.y};
      physical.gto_ref = node.gto;
      physical.max_tasks = effective_max_tasks(node);
      world.add_node(std::move(physical));
    }
    world.validate();

    // Directory tables.
    for (const auto& app : config.apps) ctx.apps[app.id] = app.node;
    for (const auto& node : config.nodes) {
      if (node.kind == phys::NodeKind::TypeA) {
        ctx.managed[*node.gto].push_back(node.id);
        ctx.host_of[node.id] = *node.gto;
      } else if (is_sensing(node)) {
        ctx.managed[node.id].push_back(node.id);
        ctx.host_of[node.id] = node.id;
      }
      if (node.kind != phys::NodeKind::TypeA) ctx.dialect_of[node.id] = node.dialect;
    }
    if (config.monitor) {
      std::set<sim::NodeId> fire_targets;
      for (const auto& overlay : config.overlays)
        for (const auto& delivery : resolve_deliveries(ctx, overlay))
          if (delivery.task.task_id == config.monitor->trigger_task)
            fire_targets.insert(delivery.target);
      ctx.fire_sensors.assign(fire_targets.begin(), fire_targets.end());
    }

    // Registration server seeded from the roster.
    for (const auto& node : config.nodes) {
      reg::SensorDescriptor descriptor;
      descriptor.id = node.id;
      descriptor.kind = node.kind;
      descriptor.quantities = node.quantities;
      descriptor.position = {node.x, node.y};
      descriptor.owner = node.owner;
      if (node.kind == phys::NodeKind::TypeA)
        descriptor.agent = "agent-" + *node.gto;
      else
        descriptor.agent = "agent-" + node.id;
      registry.register_descriptor(descriptor);
    }

    // Machines.
    IterationMachines machines;
    std::set<sim::NodeId> app_nodes;
    for (const auto& app : config.apps) app_nodes.insert(app.node);
    for (const auto& node : config.nodes) {
      if (app_nodes.count(node.id)) continue;  // applications attached below
      if (node.kind == phys::NodeKind::TypeA)
        machines.sensors[node.id] = std::make_unique<SensorMachine>(&ctx, node.id);
      else
        machines.hosts[node.id] = std::make_unique<HostMachine>(&ctx, node.id);
    }
    for (const auto& app : config.apps)
      machines.apps[app.node] = std::make_unique<AppMachine>(&ctx, app);

    for (auto& [id, machine] : machines.sensors) {
      SensorMachine* m = machine.get();
      simulator.add_node(id, [m](const sim::Delivery& d) { m->handle(d); });
    }
    for (auto& [id, machine] : machines.hosts) {
      HostMachine* m = machine.get();
      simulator.add_node(id, [m](const sim::Delivery& d) { m->handle(d); });
    }
    for (auto& [id, machine] : machines.apps) {
      AppMachine* m = machine.get();
      simulator.add_node(id, [m](const sim::Delivery& d) { m->handle(d); });
    }

    sim::LinkModel link;
    link.propagation = micros(config.link.propagation_ms);
    link.processing = micros(config.link.processing_ms);
    link.session_setup = micros(config.link.session_setup_ms);
    link.jitter_max = micros(config.link.jitter_max_ms);
    link.jitter_seed = ctx.run_seed;
    simulator.set_default_link(link);

    // Fresh-state protocol: nothing survives from the previous iteration.
    if (simulator.session_count() != 0)
      report.violations.push_back("iteration " + std::to_string(iteration) +
                                  ": stale sessions at start");
    simulator.log_local(config.apps.empty() ? config.nodes.front().id
                                            : config.apps.front().node,
                        std::nullopt, "iteration-start",
                        std::to_string(iteration));

    for (auto& [id, machine] : machines.apps) machine->start();
    simulator.run_until(micros(config.duration_ms));
    for (auto& [id, machine] : machines.apps) machine->finalize();

    // Facts for the invariant suite and the report.
    IterationFacts facts;
    facts.iteration = iteration;
    for (const auto& node : config.nodes) {
      if (node.kind == phys::NodeKind::TypeA) facts.type_a.insert(node.id);
      if (node.kind != phys::NodeKind::TypeA && is_sensing(node))
        facts.type_b_sensing.insert(node.id);
    }
    facts.app_nodes = app_nodes;
    for (auto& [node, machine] : machines.apps) {
      for (const auto& [overlay_id, members] : machine->overlay_members()) {
        facts.overlay_members[overlay_id] = members;
        facts.overlay_rendezvous[overlay_id] = node;
        facts.overlay_app_node[overlay_id] = node;
      }
    }
    facts.min_link_delay = link.propagation + link.processing;
    facts.session_setup_positive = link.session_setup > 0;
    facts.zero_jitter = link.jitter_max == 0;
    facts.baseline = config.baseline_mode;

    auto violations = check_invariants(simulator.trace(), facts, report.metrics);
    report.violations.insert(report.violations.end(), violations.begin(), violations.end());

    IterationResult result;
    result.trace = simulator.trace();
    result.facts = facts;
    for (auto& [node, machine] : machines.apps) {
      if (machine->contour()) {
        result.contour = machine->contour();
        result.observations = machine->last_observations();
      }
    }
    report.results.push_back(std::move(result));

    if (iteration == 0) preamble = roster_preamble(config, ctx).dump();
    if (iteration == config.iterations - 1) {
      report.registry_snapshot = registry.to_json();
      if (report.results.back().contour) {
        report.contour = report.results.back().contour;
        report.contour_observations = report.results.back().observations;
      }
    }
  }

  if (config.monitor)
    report.contour_params = {config.monitor->lambda_max, config.monitor->radius_m};

  // Aggregates.
  report.hpd_mean_ms = report.metrics.mean_of(MetricKind::HPD);
  report.ocd_mean_ms = report.metrics.mean_of(MetricKind::OCD);
  report.fnd_mean_ms = report.metrics.mean_of(MetricKind::FND);
  if (report.hpd_mean_ms && report.fnd_mean_ms && *report.hpd_mean_ms > 0)
    report.overhead_vs_hpd_pct = overhead_pct(*report.fnd_mean_ms, *report.hpd_mean_ms);

  // Event log.
  std::ostringstream log;
  log << "# vsn-event-log v1\n";
  log << "# fields: seq|type|t_us|from|to|channel|event|code|cf|tag|overlay|corr|deliver_us\n";
  log << "# scenario " << config.name << " seed " << config.seed << "\n";
  if (!preamble.empty()) log << "# contour-roster " << preamble << "\n";
  for (std::size_t i = 0; i < report.results.size(); ++i) {
    log << "# iteration " << i << "\n";
    for (const auto& entry : report.results[i].trace.entries())
      log << sim::format_entry(entry) << "\n";
  }
  report.events_log = log.str();
  report.metrics_csv = report.metrics.to_csv();

  json summary;
  summary["scenario"] = config.name;
  summary["seed"] = config.seed;
  summary["iterations"] = config.iterations;
  summary["mode"] = config.baseline_mode ? "baseline" : "virtualized";
  summary["units"] = "milliseconds_simulated";
  summary["note"] = "all delays are simulated virtual time, not wall clock";
  auto metric_block = [&](MetricKind kind, std::optional<double> mean_ms) {
    json block;
    block["count"] = report.metrics.series(kind).size();
    if (mean_ms) block["mean_simulated_ms"] = *mean_ms;
    return block;
  };
  summary["hpd"] = metric_block(MetricKind::HPD, report.hpd_mean_ms);
  summary["ocd"] = metric_block(MetricKind::OCD, report.ocd_mean_ms);
  summary["fnd"] = metric_block(MetricKind::FND, report.fnd_mean_ms);
  if (report.overhead_vs_hpd_pct)
    summary["overhead_vs_hpd_pct"] = *report.overhead_vs_hpd_pct;
  summary["invariants"] = {{"passed", report.violations.empty()},
                           {"violations", report.violations}};
  if (report.contour) summary["contour"] = fca::contour_to_json(*report.contour);
  report.report_json = summary;

  if (!report.violations.empty())
    VSN_WARN(report.violations.size() << " invariant violations recorded");
  return report;
}

void write_outputs(const RunReport& report, const std::string& out_dir,
                   const std::string& format) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  auto write_file = [&](const std::string& name, const std::string& content) {
    std::ofstream out(fs::path(out_dir) / name, std::ios::binary);
    out << content;
  };
  if (format == "json")
    write_file("metrics.json", report.metrics.to_json().dump(2) + "\n");
  else
    write_file("metrics.csv", report.metrics_csv);
  write_file("events.log", report.events_log);
  write_file("report.json", report.report_json.dump(2) + "\n");
  write_file("registry.json", report.registry_snapshot.dump(2) + "\n");
  if (report.contour) {
    write_file("contour.json", fca::contour_to_json(*report.contour).dump(2) + "\n");
    write_file("contour.csv", fca::contour_csv(report.contour_observations,
                                               *report.contour, report.contour_params));
  }
}

nlohmann::json contour_from_eventlog(std::istream& in) {
  json roster;
  std::vector<std::string> lines;
  std::string line;
  sim::SimTime last_time = 0;
  struct Note {
    sim::NodeId node;
    sim::SimTime at;
  };
  std::vector<Note> notes;

  while (std::getline(in, line)) {
    if (line.rfind("# contour-roster ", 0) == 0) {
      roster = json::parse(line.substr(17), nullptr, false);
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    // seq|type|t_us|from|to|channel|event|code|cf|tag|overlay|corr|deliver_us
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      auto end = line.find('|', start);
      if (end == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, end - start));
      start = end + 1;
    }
    if (fields.size() < 13) continue;
    sim::SimTime at = std::stoull(fields[2]);
    last_time = std::max(last_time, at);
    if (fields[1] != "send" || fields[9] != "fire-event") continue;
    std::string corr = fields[11];
    auto at_pos = corr.find('@');
    auto colon = corr.find(':');
    auto eq = corr.find('=');
    if (colon == std::string::npos || at_pos == std::string::npos) continue;
    std::string node = corr.substr(colon + 1, at_pos - colon - 1);
    std::string t_str = corr.substr(at_pos + 1, eq == std::string::npos
                                                    ? std::string::npos
                                                    : eq - at_pos - 1);
    notes.push_back({node, static_cast<sim::SimTime>(std::stod(t_str) * 1e6 + 0.5)});
  }

  if (roster.is_null() || roster.is_discarded() || !roster.contains("fca"))
    fail(ErrorCode::ConfigInvalid, "event log has no contour roster preamble");

  fca::RateParams params{roster["fca"].value("lambda_max", 1.0),
                         roster["fca"].value("radius_m", 500.0)};
  sim::Duration window = micros(roster["fca"].value("window_ms", 60000.0));
  int sectors = roster["fca"].value("sectors", 12);
  sim::SimTime window_start = last_time > window ? last_time - window : 0;

  std::map<sim::NodeId, phys::Position> positions;
  std::vector<fca::RateObservation> observations;
  for (const auto& sensor : roster["sensors"]) {
    sim::NodeId id = sensor.value("id", std::string());
    positions[id] = {sensor.value("x", 0.0), sensor.value("y", 0.0)};
    fca::RateObservation obs;
    obs.node = id;
    obs.window_s = sim::to_seconds(window);
    for (const auto& note : notes)
      if (note.node == id && note.at > window_start && note.at <= last_time) ++obs.count;
    observations.push_back(std::move(obs));
  }

  auto estimate = fca::compute_contour(observations, positions, params, sectors);
  json out = fca::contour_to_json(estimate);
  out["window_end_us"] = last_time;
  return out;
}

}  // namespace vsn::harness
