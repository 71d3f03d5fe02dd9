#include "vsn/harness/config.hpp"

#include <fstream>
#include <set>

#include "vsn/errors.hpp"
#include "vsn/sensoragent.hpp"

namespace vsn::harness {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { fail(ErrorCode::ConfigInvalid, what); }

double require_positive(double v, const std::string& what) {
  if (!(v > 0)) bad(what + " must be > 0");
  return v;
}

double require_non_negative(double v, const std::string& what) {
  if (v < 0) bad(what + " must be >= 0");
  return v;
}

}  // namespace

ScenarioConfig config_from_json(const json& document) {
  if (!document.is_object()) bad("scenario must be a JSON object");
  ScenarioConfig config;
  config.name = document.value("name", std::string("scenario"));
  config.seed = document.value("seed", std::uint64_t{1});
  config.duration_ms = document.value("duration_ms", 120000.0);
  config.iterations = document.value("iterations", 1);
  config.baseline_mode = document.value("baseline_mode", false);

  if (document.contains("link")) {
    const auto& link = document["link"];
    config.link.propagation_ms = link.value("propagation_ms", config.link.propagation_ms);
    config.link.processing_ms = link.value("processing_ms", config.link.processing_ms);
    config.link.session_setup_ms =
        link.value("session_setup_ms", config.link.session_setup_ms);
    config.link.jitter_max_ms = link.value("jitter_max_ms", config.link.jitter_max_ms);
  }

  if (document.contains("environment")) {
    const auto& env = document["environment"];
    config.environment.ambient_c = env.value("ambient_c", 20.0);
    if (env.contains("fire") && !env["fire"].is_null()) {
      const auto& fire = env["fire"];
      FireConfig f;
      f.x = fire.value("x", 0.0);
      f.y = fire.value("y", 0.0);
      f.start_ms = fire.value("start_ms", 0.0);
      f.intensity_c = fire.value("intensity_c", 80.0);
      f.falloff_radius_m = fire.value("falloff_radius_m", 500.0);
      config.environment.fire = f;
    }
  }

  if (!document.contains("nodes") || !document["nodes"].is_array())
    bad("scenario needs a \"nodes\" array");
  for (const auto& item : document["nodes"]) {
    NodeConfig node;
    if (!item.contains("id") || !item.contains("kind")) bad("node needs id and kind");
    node.id = item["id"].get<std::string>();
    node.kind = phys::node_kind_from_string(item["kind"].get<std::string>());
    node.x = item.value("x", 0.0);
    node.y = item.value("y", 0.0);
    if (item.contains("gto")) node.gto = item["gto"].get<std::string>();
    node.max_tasks = item.value("max_tasks", 0);
    if (item.contains("quantities"))
      for (const auto& q : item["quantities"]) node.quantities.push_back(q.get<std::string>());
    node.owner = item.value("owner", std::string());
    node.dialect = agent::dialect_from_string(item.value("dialect", std::string("keyvalue")));
    node.decline_overlays = item.value("decline_overlays", false);
    config.nodes.push_back(std::move(node));
  }

  if (document.contains("apps"))
    for (const auto& item : document["apps"]) {
      AppConfig app;
      app.id = item.at("id").get<std::string>();
      app.node = item.at("node").get<std::string>();
      app.fire_monitor = item.value("fire_monitor", false);
      config.apps.push_back(std::move(app));
    }

  if (document.contains("tasks"))
    for (const auto& item : document["tasks"]) {
      TaskConfig task;
      try {
        task.task = agent::task_from_json(item);
      } catch (const Error& e) {
        bad(std::string("bad task: ") + e.what());
      }
      config.tasks.push_back(std::move(task));
    }

  if (document.contains("overlays"))
    for (const auto& item : document["overlays"]) {
      OverlayConfig overlay;
      overlay.overlay_id = item.at("overlay_id").get<std::string>();
      overlay.service_name = item.value("service_name", overlay.overlay_id);
      overlay.app_id = item.at("app_id").get<std::string>();
      for (const auto& c : item.at("candidates")) overlay.candidates.push_back(c.get<std::string>());
      if (item.contains("tasks"))
        for (const auto& t : item["tasks"]) {
          OverlayTaskRef ref;
          if (t.is_string()) {
            ref.task_id = t.get<std::string>();
          } else {
            ref.task_id = t.at("task_id").get<std::string>();
            if (t.contains("targets"))
              for (const auto& target : t["targets"]) ref.targets.push_back(target.get<std::string>());
          }
          overlay.tasks.push_back(std::move(ref));
        }
      overlay.start_ms = item.value("start_ms", 0.0);
      overlay.setup_cost_ms = item.value("setup_cost_ms", 250.0);
      overlay.processing_ms = item.value("processing_ms", 0.2);
      config.overlays.push_back(std::move(overlay));
    }

  if (document.contains("monitor") && !document["monitor"].is_null()) {
    const auto& m = document["monitor"];
    MonitorConfig monitor;
    monitor.trigger_task = m.at("trigger_task").get<std::string>();
    monitor.lambda_max = m.value("lambda_max", 1.0);
    monitor.radius_m = m.value("radius_m", 500.0);
    monitor.window_ms = m.value("window_ms", 60000.0);
    monitor.round_interval_ms = m.value("round_interval_ms", 15000.0);
    monitor.compute_cost_ms = m.value("compute_cost_ms", 0.2);
    if (m.contains("debounce_ms")) monitor.debounce_ms = m["debounce_ms"].get<double>();
    monitor.sectors = m.value("sectors", 12);
    config.monitor = monitor;
  }

  if (document.contains("control_script"))
    for (const auto& item : document["control_script"]) {
      ControlScriptEntry entry;
      entry.at_ms = item.at("at_ms").get<double>();
      entry.via_app = item.at("via_app").get<std::string>();
      entry.verb = agent::verb_from_string(item.at("verb").get<std::string>());
      entry.target = item.at("target").get<std::string>();
      entry.args = item.value("args", json::object());
      config.control_script.push_back(std::move(entry));
    }

  return config;
}

json config_to_json(const ScenarioConfig& config) {
  json document;
  document["name"] = config.name;
  document["seed"] = config.seed;
  document["duration_ms"] = config.duration_ms;
  document["iterations"] = config.iterations;
  document["baseline_mode"] = config.baseline_mode;
  document["link"] = {{"propagation_ms", config.link.propagation_ms},
                      {"processing_ms", config.link.processing_ms},
                      {"session_setup_ms", config.link.session_setup_ms},
                      {"jitter_max_ms", config.link.jitter_max_ms}};
  json environment = {{"ambient_c", config.environment.ambient_c}};
  if (config.environment.fire) {
    const auto& f = *config.environment.fire;
    environment["fire"] = {{"x", f.x},
                           {"y", f.y},
                           {"start_ms", f.start_ms},
                           {"intensity_c", f.intensity_c},
                           {"falloff_radius_m", f.falloff_radius_m}};
  }
  document["environment"] = environment;

  json nodes = json::array();
  for (const auto& node : config.nodes) {
    json item = {{"id", node.id},
                 {"kind", phys::to_string(node.kind)},
                 {"x", node.x},
                 {"y", node.y},
                 {"owner", node.owner},
                 {"dialect", agent::to_string(node.dialect)}};
    if (node.gto) item["gto"] = *node.gto;
    if (node.max_tasks > 0) item["max_tasks"] = node.max_tasks;
    if (!node.quantities.empty()) item["quantities"] = node.quantities;
    if (node.decline_overlays) item["decline_overlays"] = true;
    nodes.push_back(std::move(item));
  }
  document["nodes"] = nodes;

  json apps = json::array();
  for (const auto& app : config.apps) {
    json item = {{"id", app.id}, {"node", app.node}};
    if (app.fire_monitor) item["fire_monitor"] = true;
    apps.push_back(std::move(item));
  }
  document["apps"] = apps;

  json tasks = json::array();
  for (const auto& task : config.tasks) tasks.push_back(agent::task_to_json(task.task));
  document["tasks"] = tasks;

  json overlays = json::array();
  for (const auto& overlay : config.overlays) {
    json refs = json::array();
    for (const auto& ref : overlay.tasks) {
      if (ref.targets.empty())
        refs.push_back(ref.task_id);
      else
        refs.push_back({{"task_id", ref.task_id}, {"targets", ref.targets}});
    }
    overlays.push_back({{"overlay_id", overlay.overlay_id},
                        {"service_name", overlay.service_name},
                        {"app_id", overlay.app_id},
                        {"candidates", overlay.candidates},
                        {"tasks", refs},
                        {"start_ms", overlay.start_ms},
                        {"setup_cost_ms", overlay.setup_cost_ms},
                        {"processing_ms", overlay.processing_ms}});
  }
  document["overlays"] = overlays;

  if (config.monitor) {
    const auto& m = *config.monitor;
    json monitor = {{"trigger_task", m.trigger_task},
                    {"lambda_max", m.lambda_max},
                    {"radius_m", m.radius_m},
                    {"window_ms", m.window_ms},
                    {"round_interval_ms", m.round_interval_ms},
                    {"compute_cost_ms", m.compute_cost_ms},
                    {"sectors", m.sectors}};
    if (m.debounce_ms) monitor["debounce_ms"] = *m.debounce_ms;
    document["monitor"] = monitor;
  }

  if (!config.control_script.empty()) {
    json script = json::array();
    for (const auto& entry : config.control_script)
      script.push_back({{"at_ms", entry.at_ms},
                        {"via_app", entry.via_app},
                        {"verb", agent::to_string(entry.verb)},
                        {"target", entry.target},
                        {"args", entry.args}});
    document["control_script"] = script;
  }
  return document;
}

ScenarioConfig load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) bad("cannot open scenario file " + path);
  json document = json::parse(in, nullptr, false);
  if (document.is_discarded()) bad("scenario file is not valid JSON: " + path);
  return config_from_json(document);
}

int effective_max_tasks(const NodeConfig& node) {
  if (node.max_tasks > 0) return node.max_tasks;
  return node.kind == phys::NodeKind::TypeA ? phys::kDefaultMaxTasksTypeA
                                            : phys::kDefaultMaxTasksCapable;
}

bool is_sensing(const NodeConfig& node) { return !node.quantities.empty(); }

void validate(const ScenarioConfig& config) {
  require_positive(config.duration_ms, "duration_ms");
  if (config.iterations < 1) bad("iterations must be >= 1");
  require_non_negative(config.link.propagation_ms, "link.propagation_ms");
  require_non_negative(config.link.processing_ms, "link.processing_ms");
  require_non_negative(config.link.session_setup_ms, "link.session_setup_ms");
  require_non_negative(config.link.jitter_max_ms, "link.jitter_max_ms");
  if (config.environment.fire) {
    require_positive(config.environment.fire->falloff_radius_m, "fire.falloff_radius_m");
    require_non_negative(config.environment.fire->intensity_c, "fire.intensity_c");
  }

  if (config.nodes.empty()) bad("no nodes");
  std::map<sim::NodeId, const NodeConfig*> nodes;
  for (const auto& node : config.nodes) {
    if (!nodes.emplace(node.id, &node).second) bad("duplicate node id " + node.id);
  }
  for (const auto& node : config.nodes) {
    if (node.kind == phys::NodeKind::TypeA) {
      if (!node.gto) bad(node.id + ": TypeA node needs a gto reference");
      auto it = nodes.find(*node.gto);
      if (it == nodes.end()) bad(node.id + ": gto " + *node.gto + " does not exist");
      if (it->second->kind == phys::NodeKind::TypeA)
        bad(node.id + ": gto " + *node.gto + " must be TypeB or GTO");
      if (node.quantities.empty()) bad(node.id + ": TypeA sensor needs quantities");
    }
    if (node.kind == phys::NodeKind::TypeB && node.quantities.empty())
      bad(node.id + ": TypeB sensor needs quantities");
    if (node.max_tasks < 0) bad(node.id + ": max_tasks must be >= 0");
  }

  std::map<std::string, const AppConfig*> apps;
  for (const auto& app : config.apps) {
    if (!apps.emplace(app.id, &app).second) bad("duplicate app id " + app.id);
    if (!nodes.count(app.node)) bad("app " + app.id + ": node " + app.node + " does not exist");
    if (nodes.at(app.node)->kind == phys::NodeKind::TypeA)
      bad("app " + app.id + " cannot run on a TypeA node");
  }

  std::map<std::string, const vrt::AppTask*> tasks;
  for (const auto& task : config.tasks) {
    if (!tasks.emplace(task.task.task_id, &task.task).second)
      bad("duplicate task id " + task.task.task_id);
    if (!apps.count(task.task.app_id))
      bad("task " + task.task.task_id + ": app " + task.task.app_id + " does not exist");
    if (task.task.priority < 0) bad("task " + task.task.task_id + ": priority < 0");
  }

  // Host -> managed sensors, for target resolution and capacity checks.
  std::map<sim::NodeId, std::vector<sim::NodeId>> managed;
  for (const auto& node : config.nodes) {
    if (node.kind == phys::NodeKind::TypeA)
      managed[*node.gto].push_back(node.id);
    else if (is_sensing(node))
      managed[node.id].push_back(node.id);
  }

  std::map<sim::NodeId, int> deployed;
  std::set<std::string> overlay_ids;
  for (const auto& overlay : config.overlays) {
    if (!overlay_ids.insert(overlay.overlay_id).second)
      bad("duplicate overlay id " + overlay.overlay_id);
    if (overlay.service_name.empty()) bad(overlay.overlay_id + ": empty service name");
    if (!apps.count(overlay.app_id))
      bad(overlay.overlay_id + ": app " + overlay.app_id + " does not exist");
    if (overlay.candidates.empty()) bad(overlay.overlay_id + ": no candidates");
    for (const auto& candidate : overlay.candidates) {
      auto it = nodes.find(candidate);
      if (it == nodes.end()) bad(overlay.overlay_id + ": candidate " + candidate + " missing");
      if (it->second->kind == phys::NodeKind::TypeA)
        bad(overlay.overlay_id + ": candidate " + candidate + " is TypeA");
    }
    for (const auto& ref : overlay.tasks) {
      auto task_it = tasks.find(ref.task_id);
      if (task_it == tasks.end())
        bad(overlay.overlay_id + ": unknown task " + ref.task_id);
      if (task_it->second->app_id != overlay.app_id)
        bad(overlay.overlay_id + ": task " + ref.task_id + " belongs to another app");
      std::vector<sim::NodeId> targets = ref.targets;
      if (targets.empty()) {
        for (const auto& candidate : overlay.candidates) {
          auto m = managed.find(candidate);
          if (m != managed.end())
            targets.insert(targets.end(), m->second.begin(), m->second.end());
        }
      }
      for (const auto& target : targets) {
        auto node_it = nodes.find(target);
        if (node_it == nodes.end())
          bad(overlay.overlay_id + ": target " + target + " missing");
        bool covered = false;
        for (const auto& candidate : overlay.candidates) {
          auto m = managed.find(candidate);
          if (m != managed.end())
            for (const auto& s : m->second) covered = covered || s == target;
        }
        if (!covered)
          bad(overlay.overlay_id + ": target " + target + " not managed by any candidate");
        bool supported = false;
        for (const auto& q : node_it->second->quantities)
          supported = supported || q == task_it->second->quantity;
        if (!supported)
          bad(overlay.overlay_id + ": target " + target + " does not sense " +
              task_it->second->quantity);
        ++deployed[target];
      }
    }
  }
  for (const auto& [target, count] : deployed)
    if (count > effective_max_tasks(*nodes.at(target)))
      bad(target + ": " + std::to_string(count) + " tasks exceed max_tasks " +
          std::to_string(effective_max_tasks(*nodes.at(target))));

  if (config.monitor) {
    if (!tasks.count(config.monitor->trigger_task))
      bad("monitor.trigger_task " + config.monitor->trigger_task + " does not exist");
    if (!tasks.at(config.monitor->trigger_task)->notification)
      bad("monitor.trigger_task must have a notification policy");
    require_positive(config.monitor->lambda_max, "monitor.lambda_max");
    require_positive(config.monitor->radius_m, "monitor.radius_m");
    require_positive(config.monitor->window_ms, "monitor.window_ms");
    if (config.monitor->sectors < 4) bad("monitor.sectors must be >= 4");
  }
  bool any_fire_monitor = false;
  for (const auto& app : config.apps) any_fire_monitor = any_fire_monitor || app.fire_monitor;
  if (any_fire_monitor && !config.monitor) bad("fire_monitor app needs a monitor section");

  for (const auto& entry : config.control_script) {
    if (!apps.count(entry.via_app)) bad("control_script: app " + entry.via_app + " missing");
    if (!nodes.count(entry.target)) bad("control_script: target " + entry.target + " missing");
    require_non_negative(entry.at_ms, "control_script.at_ms");
  }
}

ScenarioConfig brushfire_scenario() {
  ScenarioConfig config;
  config.name = "brushfire";
  config.seed = 42;
  config.duration_ms = 120000.0;

  config.environment.ambient_c = 20.0;
  config.environment.fire = FireConfig{150.0, 90.0, 20000.0, 80.0, 500.0};

  auto sensor = [](const sim::NodeId& id, phys::NodeKind kind, double x, double y,
                   const std::string& owner) {
    NodeConfig node;
    node.id = id;
    node.kind = kind;
    node.x = x;
    node.y = y;
    node.max_tasks = 3;
    node.quantities = {"temperature"};
    node.owner = owner;
    return node;
  };
  auto gateway = [](const sim::NodeId& id, double x, double y, const std::string& owner,
                    agent::Dialect dialect) {
    NodeConfig node;
    node.id = id;
    node.kind = phys::NodeKind::Gto;
    node.x = x;
    node.y = y;
    node.owner = owner;
    node.dialect = dialect;
    return node;
  };

  NodeConfig city_admin = gateway("city-admin", 0, -60, "city", agent::Dialect::KeyValueText);
  NodeConfig home_app = gateway("home-app", -40, -60, "homeowners", agent::Dialect::KeyValueText);
  config.nodes.push_back(city_admin);
  config.nodes.push_back(home_app);

  struct HomeSite {
    const char* sensor;
    const char* gateway;
    double sx, sy, gx, gy;
    const char* owner;
    agent::Dialect dialect;
  };
  const HomeSite sites[] = {
      {"s01", "g1", 200, 120, 205, 125, "homeowner-1", agent::Dialect::KeyValueText},
      {"s02", "g2", 100, 190, 95, 195, "homeowner-2", agent::Dialect::KeyValueText},
      {"s03", "g3", 300, 30, 305, 25, "homeowner-3", agent::Dialect::KeyValueText},
      {"s04", "g4", 380, 150, 385, 155, "homeowner-4", agent::Dialect::CompactBinary},
  };
  for (const auto& site : sites) {
    config.nodes.push_back(gateway(site.gateway, site.gx, site.gy, site.owner, site.dialect));
    NodeConfig s = sensor(site.sensor, phys::NodeKind::TypeA, site.sx, site.sy, site.owner);
    s.gto = site.gateway;
    config.nodes.push_back(std::move(s));
  }
  NodeConfig s05 = sensor("s05", phys::NodeKind::TypeB, 400, 280, "city");
  s05.dialect = agent::Dialect::CompactBinary;
  NodeConfig s06 = sensor("s06", phys::NodeKind::TypeB, 50, 400, "city");
  s06.dialect = agent::Dialect::CompactBinary;
  config.nodes.push_back(std::move(s05));
  config.nodes.push_back(std::move(s06));

  config.apps.push_back({"city", "city-admin", true});
  config.apps.push_back({"home", "home-app", false});

  auto make_task = [](const std::string& id, const std::string& app, double period_ms,
                      int priority) {
    TaskConfig t;
    t.task.task_id = id;
    t.task.app_id = app;
    t.task.quantity = "temperature";
    t.task.period = static_cast<sim::Duration>(period_ms * 1000.0);
    t.task.priority = priority;
    return t;
  };
  TaskConfig fire_task = make_task("city-fire", "city", 500, 0);
  fire_task.task.condition = vrt::ReportCondition::threshold_above(45.0);
  fire_task.task.notification = vrt::NotificationPolicy{1.0, 20.0, 80.0};
  config.tasks.push_back(fire_task);
  config.tasks.push_back(make_task("city-ambient", "city", 2000, 1));
  config.tasks.push_back(make_task("home-comfort", "home", 1000, 2));
  config.tasks.push_back(make_task("city-diag", "city", 1000, 2));

  OverlayConfig fire_overlay;
  fire_overlay.overlay_id = "fire-contour-service";
  fire_overlay.service_name = "fire contour service";
  fire_overlay.app_id = "city";
  fire_overlay.candidates = {"g1", "g2", "g3", "g4", "s05", "s06"};
  fire_overlay.tasks = {{"city-fire", {}}, {"city-ambient", {}}, {"city-diag", {"s05", "s06"}}};
  fire_overlay.setup_cost_ms = 250.0;
  fire_overlay.processing_ms = 0.21;
  config.overlays.push_back(fire_overlay);

  OverlayConfig home_overlay;
  home_overlay.overlay_id = "home-monitor";
  home_overlay.service_name = "home monitoring service";
  home_overlay.app_id = "home";
  home_overlay.candidates = {"g1", "g2", "g3", "g4"};
  home_overlay.tasks = {{"home-comfort", {}}};
  home_overlay.setup_cost_ms = 250.0;
  home_overlay.processing_ms = 0.21;
  config.overlays.push_back(home_overlay);

  MonitorConfig monitor;
  monitor.trigger_task = "city-fire";
  monitor.lambda_max = 1.0;
  monitor.radius_m = 500.0;
  monitor.window_ms = 60000.0;
  monitor.round_interval_ms = 15000.0;
  monitor.compute_cost_ms = 0.2;
  monitor.sectors = 12;
  config.monitor = monitor;

  // Fig. 3b style control flow: raise the ambient task on sensor 02 above
  // the fire task mid-run.
  ControlScriptEntry reprioritize;
  reprioritize.at_ms = 60000.0;
  reprioritize.via_app = "city";
  reprioritize.verb = agent::Verb::SetPriority;
  reprioritize.target = "s02";
  reprioritize.args = {{"task_id", "city-ambient"}, {"priority", 0}};
  config.control_script.push_back(reprioritize);

  return config;
}

}  // namespace vsn::harness
