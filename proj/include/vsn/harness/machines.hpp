#ifndef VSN_HARNESS_MACHINES_HPP
#define VSN_HARNESS_MACHINES_HPP

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vsn/firecontour.hpp"
#include "vsn/harness/config.hpp"
#include "vsn/harness/metrics.hpp"
#include "vsn/overlaynet.hpp"
#include "vsn/registry.hpp"
#include "vsn/sensoragent.hpp"

namespace vsn::harness {

/// Everything one scenario iteration shares. Owns nothing that outlives it.
struct RunContext {
  sim::Simulator* simulator = nullptr;
  phys::World* world = nullptr;
  reg::Registry* registry = nullptr;
  MetricsCollector* metrics = nullptr;
  const ScenarioConfig* config = nullptr;
  agent::AppDirectory apps;                                // app id -> node
  std::map<sim::NodeId, std::vector<sim::NodeId>> managed; // host -> sensors
  std::map<sim::NodeId, sim::NodeId> host_of;              // sensor -> host
  std::map<sim::NodeId, agent::Dialect> dialect_of;        // host -> dialect
  std::vector<sim::NodeId> fire_sensors;                   // targets of the trigger task
  int iteration = 0;
  std::uint64_t run_seed = 0;
  std::uint64_t vs_counter = 0;
};

/// Expand an overlay's task references into per-(member, target) deliveries.
std::vector<overlay::TaskDelivery> resolve_deliveries(const RunContext& ctx,
                                                      const OverlayConfig& overlay);

/// TypeA sensor: local task runtime plus the Gi endpoint toward its gateway.
class SensorMachine {
public:
  SensorMachine(RunContext* context, sim::NodeId id);

  void handle(const sim::Delivery& delivery);
  vrt::NodeRuntime& runtime() { return runtime_; }

private:
  void do_tick(sim::SimTime at);
  void schedule_next_tick();

  RunContext* ctx_;
  sim::NodeId id_;
  vrt::NodeRuntime runtime_;
  agent::Dialect dialect_;
  std::uint16_t mid_ = 1;
  std::set<sim::SimTime> scheduled_ticks_;
};

/// GTO / TypeB host: sensor agent, overlay edge peer, optionally its own
/// sensing runtime, notification bookkeeping for the fire protocol.
class HostMachine {
public:
  HostMachine(RunContext* context, sim::NodeId id);

  void handle(const sim::Delivery& delivery);
  agent::Agent& agent() { return agent_; }
  overlay::EdgePeer& edge() { return edge_; }
  vrt::NodeRuntime* runtime() { return runtime_ ? runtime_.get() : nullptr; }

private:
  struct PendingRound {
    bool baseline = false;
    std::string context;  // overlay id, or app id for baseline rounds
    sim::NodeId reply_node;
    sim::SimTime window_end = 0;
  };

  void do_tick(sim::SimTime at);
  void schedule_next_tick();
  void handle_gi(const sim::Delivery& delivery);
  void handle_ci_request(const sim::Delivery& delivery);
  void send_fire_reply(const std::string& overlay_id, std::uint64_t round,
                       sim::SimTime window_end);
  std::vector<fca::RateObservation> observations_at(sim::SimTime window_end) const;

  RunContext* ctx_;
  sim::NodeId id_;
  agent::Agent agent_;
  overlay::EdgePeer edge_;
  std::unique_ptr<vrt::NodeRuntime> runtime_;
  std::set<sim::SimTime> scheduled_ticks_;
  std::map<sim::NodeId, std::vector<sim::SimTime>> notifications_;  // per managed sensor
  std::map<std::uint64_t, PendingRound> pending_rounds_;
  sim::Duration window_ = 0;
  sim::Duration compute_cost_ = 0;
};

/// Application node: data sink, rendezvous peer for its overlays, and for the
/// fire-monitoring application the round/contour logic.
class AppMachine {
public:
  AppMachine(RunContext* context, const AppConfig& app);

  void start();
  void handle(const sim::Delivery& delivery);
  void finalize();

  /// Consume one fire-event record; may trigger a notification round.
  /// Throws OverlayNotReady when a round would be due before the overlay is.
  bool on_fire_event(const fca::FireEvent& event);

  const std::optional<fca::ContourEstimate>& contour() const { return contour_; }
  const std::vector<fca::RateObservation>& last_observations() const {
    return last_observations_;
  }
  const fca::FireMonitor* monitor() const { return monitor_ ? monitor_.get() : nullptr; }
  overlay::Rendezvous* rendezvous(const std::string& overlay_id);
  std::vector<std::pair<std::string, std::vector<sim::NodeId>>> overlay_members() const;
  std::size_t batches_received() const { return batches_received_; }
  const std::string& fire_overlay_id() const { return fire_overlay_id_; }

private:
  void start_overlay(const OverlayConfig& overlay);
  void deploy_baseline(const OverlayConfig& overlay);
  void run_script_entry(const ControlScriptEntry& entry);
  void handle_di_post(const sim::Delivery& delivery);
  void handle_reply_post(const sim::Delivery& delivery);
  void handle_round_reply(const sim::NodeId& from, const nlohmann::json& body,
                          sim::SimTime at);
  void begin_round(const sim::NodeId& reporter);
  void complete_round(const fca::FireMonitor::Round& round);
  std::uint16_t next_mid() { return mid_++; }

  RunContext* ctx_;
  AppConfig app_;
  std::map<std::string, std::unique_ptr<overlay::Rendezvous>> rendezvous_;
  std::map<std::string, const OverlayConfig*> overlay_configs_;
  std::string fire_overlay_id_;
  std::unique_ptr<fca::FireMonitor> monitor_;
  std::optional<fca::ContourEstimate> contour_;
  std::vector<fca::RateObservation> last_observations_;
  std::uint16_t mid_ = 1;
  std::size_t batches_received_ = 0;
  bool baseline_ready_ = false;
  std::size_t pending_baseline_deploys_ = 0;
  std::set<std::uint16_t> pending_baseline_mids_;
};

}  // namespace vsn::harness

#endif
