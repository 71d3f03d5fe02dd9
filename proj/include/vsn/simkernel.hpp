#ifndef VSN_SIMKERNEL_HPP
#define VSN_SIMKERNEL_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "vsn/channel.hpp"
#include "vsn/coap.hpp"

namespace vsn::sim {

/// Microseconds since simulation start. Only event dispatch advances the clock.
using SimTime = std::uint64_t;
using Duration = std::uint64_t;
using NodeId = std::string;
using EventId = std::uint64_t;

constexpr Duration ms(std::uint64_t v) { return v * 1000; }
inline double to_ms(SimTime t) { return static_cast<double>(t) / 1000.0; }
inline double to_seconds(SimTime t) { return static_cast<double>(t) / 1e6; }

/// Per-hop delays. session_setup is paid once per ordered (sender, receiver)
/// pair, on the first initiated (non-reply) send; replies ride the requester's
/// connection. Sessions never expire within a run.
struct LinkModel {
  Duration propagation = 0;
  Duration processing = 0;
  Duration session_setup = 0;
  Duration jitter_max = 0;
  std::uint64_t jitter_seed = 0;
};

/// What travels between nodes (or to self, for timers).
struct Packet {
  std::optional<ChannelKind> channel;  // empty for local timer events
  wire::Message msg;
  bool reply = false;        // responses never pay session setup
  Duration extra_delay = 0;  // sender-side processing surcharge (overlay middleware)
  std::string tag;           // short machine tag ("data", "adv", "timer:tick", ...)
  std::string correlation;   // e.g. "city-fire:s01@20.5" for data-path messages
  std::string overlay;       // overlay id when this is overlay traffic
};

struct Delivery {
  EventId event = 0;
  SimTime at = 0;
  NodeId from;
  NodeId to;
  Packet packet;
};

enum class TraceType { Send, Deliver, Local };
const char* to_string(TraceType type);

/// One line of the run's ordered event trace. Everything assertions and the
/// event-log file need lives here; no pointers, no wall-clock.
struct TraceEntry {
  std::uint64_t seq = 0;
  TraceType type = TraceType::Local;
  SimTime at = 0;
  NodeId from;
  NodeId to;
  EventId event = 0;
  std::optional<ChannelKind> channel;
  std::string tag;
  std::string correlation;
  std::string overlay;
  int code = -1;            // raw CoAP code byte, -1 when not applicable
  int content_format = -1;  // -1 when absent
  SimTime deliver_at = 0;   // for Send entries: scheduled delivery time
};

class Trace {
public:
  void append(TraceEntry entry);
  const std::vector<TraceEntry>& entries() const { return entries_; }
  void clear() { entries_.clear(); }

private:
  std::vector<TraceEntry> entries_;
};

std::string format_entry(const TraceEntry& entry);  // stable pipe-separated form

class Simulator {
public:
  using Handler = std::function<void(const Delivery&)>;

  Simulator() = default;

  void add_node(const NodeId& id, Handler handler);
  bool has_node(const NodeId& id) const;
  void set_handler(const NodeId& id, Handler handler);

  void set_default_link(const LinkModel& link);
  void set_link(const NodeId& from, const NodeId& to, const LinkModel& link);
  void set_link_down(const NodeId& from, const NodeId& to, bool down);
  const LinkModel& link_between(const NodeId& from, const NodeId& to) const;

  SimTime now() const { return clock_; }

  /// Enqueue an event. fire_at must not be in the past.
  EventId schedule(SimTime fire_at, const NodeId& target, Packet packet);

  /// Deliver a packet from one node to another through the link model.
  /// Returns the delivery time.
  SimTime send(const NodeId& from, const NodeId& to, Packet packet);

  /// Dispatch every event with fire_at <= t, in (fire_at, insertion) order,
  /// then advance the clock to t. Returns the number dispatched.
  std::size_t run_until(SimTime t);

  /// Drain the queue completely. Returns the number dispatched.
  std::size_t run_all();

  bool session_established(const NodeId& from, const NodeId& to) const;
  std::size_t session_count() const { return sessions_.size(); }

  /// Append a Local entry to the trace (PDi/PCi applications, lifecycle marks).
  void log_local(const NodeId& node, std::optional<ChannelKind> channel, const std::string& tag,
                 const std::string& correlation = "", const std::string& overlay = "");

  Trace& trace() { return trace_; }
  const Trace& trace() const { return trace_; }

private:
  struct Pending {
    SimTime fire_at = 0;
    EventId id = 0;
    NodeId target;
    NodeId source;
    Packet packet;
  };
  struct Later {
    bool operator()(const Pending& a, const Pending& b) const {
      if (a.fire_at != b.fire_at) return a.fire_at > b.fire_at;
      return a.id > b.id;
    }
  };

  Duration jitter_for(const NodeId& from, const NodeId& to, const LinkModel& link);
  void dispatch(const Pending& pending);

  SimTime clock_ = 0;
  EventId next_event_ = 1;
  std::map<NodeId, Handler> nodes_;
  LinkModel default_link_{};
  std::map<std::pair<NodeId, NodeId>, LinkModel> link_overrides_;
  std::set<std::pair<NodeId, NodeId>> down_links_;
  std::set<std::pair<NodeId, NodeId>> sessions_;
  std::map<std::pair<NodeId, NodeId>, std::mt19937_64> jitter_rng_;
  std::priority_queue<Pending, std::vector<Pending>, Later> queue_;
  Trace trace_;
};

}  // namespace vsn::sim

#endif
