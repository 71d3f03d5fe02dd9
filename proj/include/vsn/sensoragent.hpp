#ifndef VSN_SENSORAGENT_HPP
#define VSN_SENSORAGENT_HPP

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vsn/control.hpp"
#include "vsn/dialect.hpp"
#include "vsn/errors.hpp"
#include "vsn/physnode.hpp"
#include "vsn/simkernel.hpp"
#include "vsn/vruntime.hpp"

namespace vsn::agent {

/// app_id -> application node id, used to route Di traffic.
using AppDirectory = std::map<std::string, sim::NodeId>;

struct AgentBinding {
  std::string agent_id;
  sim::NodeId host;                   // TypeB or GTO node
  std::vector<sim::NodeId> managed;   // self and/or delegating TypeA nodes
  Dialect dialect = Dialect::KeyValueText;
};

/// Deterministic public path for the standardized interfaces.
/// PDi/PCi/Gi are proprietary and have no public URI.
std::vector<std::string> uri_for(const AgentBinding& binding, ChannelKind channel,
                                 const sim::NodeId& node);  // ProprietaryChannel

nlohmann::json task_to_json(const vrt::AppTask& task);
vrt::AppTask task_from_json(const nlohmann::json& value);  // MalformedCommand

/// Trace correlation key for data-path messages: "<task>:<bn>@<t>".
std::string data_correlation(const std::string& task_id,
                             const std::vector<wire::SenMLRecord>& records);

/// Response code for a failed control operation (4.04 for unknown
/// task/node/target, 4.00 otherwise).
wire::Code response_code_for(const Error& error);

/// Virtual sensor access layer for one host: exposes Di/Ci and maps them onto
/// the proprietary PDi/PCi (locally) or across the Gi hop (managed TypeA).
class Agent {
public:
  Agent(AgentBinding binding, const phys::World* world);

  const AgentBinding& binding() const { return binding_; }
  bool manages(const sim::NodeId& node) const;

  // The agent keeps the descriptors of tasks it deployed, per managed node;
  // data reports are matched against this table.
  void record_task(const sim::NodeId& node, const vrt::AppTask& task);
  void erase_task(const sim::NodeId& node, const std::string& task_id);
  const vrt::AppTask* task_for(const sim::NodeId& node, const std::string& task_id) const;

  /// Data path: translate one report from a managed node, encode as
  /// SenML-JSON and POST it on Di to the owning application.
  /// Returns the Di delivery time.  Errors: UnmanagedNode, UnknownTask,
  /// UnknownTarget (app not routable).
  sim::SimTime ingest_pdi(sim::Simulator& simulator, const sim::NodeId& from,
                          const std::string& task_id,
                          const std::vector<wire::SenMLRecord>& records,
                          const AppDirectory& apps);

  /// Same, for a proprietary frame that arrived over Gi. DialectError on
  /// malformed bytes.
  sim::SimTime ingest_pdi_frame(sim::Simulator& simulator, const sim::NodeId& from,
                                std::span<const std::uint8_t> frame,
                                const AppDirectory& apps);

  struct CiResult {
    std::optional<wire::Message> response;  // immediate response, if any
    bool forwarded_gi = false;              // deferred: response follows the Gi ack
  };

  /// Control path: map a command onto the PCi call of the target node, via
  /// Gi when the target is a delegating TypeA sensor. `local_runtime` is the
  /// runtime when the target is hosted on this node, null otherwise.
  /// `on_local_deploy` runs after a successful local deploy/remove so the
  /// owner can refresh tick scheduling.
  CiResult handle_ci(sim::Simulator& simulator, const ControlCommand& command,
                     const wire::Message& request, const sim::NodeId& requester,
                     vrt::NodeRuntime* local_runtime,
                     const std::function<void()>& on_local_change);

  struct DeferredResponse {
    sim::NodeId requester;
    wire::Message response;
  };

  /// Resolve a pending Gi control round-trip; returns the Ci response to send.
  std::optional<DeferredResponse> complete_gi_ack(const wire::Message& gi_ack);

  /// Track Di POST acknowledgements so per-exchange HPD can be measured at
  /// the sender. Returns true when the ack matched a pending Di request.
  bool record_di_ack(const wire::Message& ack, sim::SimTime at);
  std::function<void(const sim::NodeId& peer, sim::SimTime sent, sim::SimTime received)>
      on_di_exchange;

  std::uint16_t next_mid() { return mid_++; }

  /// Apply a control command against a node runtime (the PCi call proper).
  /// Shared between the local and the sensor-side Gi paths.
  static wire::Code apply_pci(const ControlCommand& command, vrt::NodeRuntime& runtime,
                              sim::SimTime now);

private:
  sim::SimTime post_di(sim::Simulator& simulator, const vrt::AppTask& task,
                       const std::vector<wire::SenMLRecord>& records,
                       const AppDirectory& apps);

  AgentBinding binding_;
  const phys::World* world_;
  std::map<sim::NodeId, std::map<std::string, vrt::AppTask>> tasks_;
  std::map<std::uint16_t, std::pair<sim::NodeId, sim::SimTime>> pending_di_;  // mid -> (app node, sent)
  struct PendingGi {
    sim::NodeId requester;
    std::uint16_t request_mid = 0;
    ControlCommand command;
  };
  std::map<std::uint16_t, PendingGi> pending_gi_;  // gi mid -> originating Ci request
  std::uint16_t mid_ = 1;
};

}  // namespace vsn::agent

#endif
