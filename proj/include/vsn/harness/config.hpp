#ifndef VSN_HARNESS_CONFIG_HPP
#define VSN_HARNESS_CONFIG_HPP

#include <optional>
#include <string>
#include <vector>

#include "vsn/control.hpp"
#include "vsn/dialect.hpp"
#include "vsn/physnode.hpp"
#include "vsn/vruntime.hpp"

#include "json.hpp"

namespace vsn::harness {

struct LinkConfig {
  double propagation_ms = 8.5;
  double processing_ms = 1.0;
  double session_setup_ms = 150.0;
  double jitter_max_ms = 0.0;
};

struct FireConfig {
  double x = 0, y = 0;
  double start_ms = 0;
  double intensity_c = 80.0;
  double falloff_radius_m = 500.0;
};

struct EnvironmentConfig {
  double ambient_c = 20.0;
  std::optional<FireConfig> fire;
};

struct NodeConfig {
  sim::NodeId id;
  phys::NodeKind kind = phys::NodeKind::TypeA;
  double x = 0, y = 0;
  std::optional<sim::NodeId> gto;
  int max_tasks = 0;  // 0 = default for the kind
  std::vector<std::string> quantities;
  std::string owner;
  agent::Dialect dialect = agent::Dialect::KeyValueText;
  bool decline_overlays = false;
};

struct AppConfig {
  std::string id;
  sim::NodeId node;
  bool fire_monitor = false;
};

struct TaskConfig {
  vrt::AppTask task;  // period filled from period_ms
};

struct OverlayTaskRef {
  std::string task_id;
  std::vector<sim::NodeId> targets;  // empty = every sensor managed by a member
};

struct OverlayConfig {
  std::string overlay_id;
  std::string service_name;
  std::string app_id;
  std::vector<sim::NodeId> candidates;
  std::vector<OverlayTaskRef> tasks;
  double start_ms = 0;
  double setup_cost_ms = 250.0;  // local pre-configuration (middleware start-up)
  double processing_ms = 0.2;    // per-message overlay middleware cost
};

struct MonitorConfig {
  std::string trigger_task;  // the notification-gated task feeding fire events
  double lambda_max = 1.0;
  double radius_m = 500.0;
  double window_ms = 60000.0;
  double round_interval_ms = 15000.0;
  double compute_cost_ms = 0.2;
  std::optional<double> debounce_ms;  // default: one trigger-task period
  int sectors = 12;
};

struct ControlScriptEntry {
  double at_ms = 0;
  std::string via_app;
  agent::Verb verb = agent::Verb::SetPriority;
  sim::NodeId target;
  nlohmann::json args = nlohmann::json::object();
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::uint64_t seed = 1;
  double duration_ms = 120000.0;
  int iterations = 1;
  bool baseline_mode = false;
  LinkConfig link;
  EnvironmentConfig environment;
  std::vector<NodeConfig> nodes;
  std::vector<AppConfig> apps;
  std::vector<TaskConfig> tasks;
  std::vector<OverlayConfig> overlays;
  std::optional<MonitorConfig> monitor;
  std::vector<ControlScriptEntry> control_script;
};

ScenarioConfig config_from_json(const nlohmann::json& document);  // ConfigInvalid
nlohmann::json config_to_json(const ScenarioConfig& config);
ScenarioConfig load_scenario_file(const std::string& path);      // ConfigInvalid

/// Full structural validation; throws ConfigInvalid with a located message.
void validate(const ScenarioConfig& config);

int effective_max_tasks(const NodeConfig& node);
bool is_sensing(const NodeConfig& node);

/// The shipped brush-fire scenario: six sensors running three application
/// tasks each, two overlays over one roster, fire monitoring with contour
/// estimation for the city administration.
ScenarioConfig brushfire_scenario();

}  // namespace vsn::harness

#endif
