#ifndef VSN_OVERLAYNET_HPP
#define VSN_OVERLAYNET_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vsn/registry.hpp"
#include "vsn/simkernel.hpp"
#include "vsn/vruntime.hpp"

#include "json.hpp"

namespace vsn::overlay {

/// Wire tag values are part of the artifact's wire contract.
enum class MsgKind : std::uint8_t {
  Advertise = 1,
  JoinRequest = 2,
  JoinAck = 3,
  GroupMulticast = 4,
  DirectReply = 5,
};

const char* to_string(MsgKind kind);

struct OverlayMessage {
  MsgKind kind = MsgKind::Advertise;
  std::string overlay_id;
  sim::NodeId sender;
  nlohmann::json body = nlohmann::json::object();
};

/// One-byte kind tag followed by a JSON document.
std::vector<std::uint8_t> encode_overlay(const OverlayMessage& message);
OverlayMessage decode_overlay(std::span<const std::uint8_t> bytes);  // Truncated, MalformedJson

struct OverlayAdvertisement {
  std::string overlay_id;
  std::string service_name;
  sim::NodeId rendezvous;
  sim::SimTime created_at = 0;
  sim::Duration processing = 0;  // per-message overlay middleware cost
};

enum class GroupState { Forming, Ready, Active, Failed };
const char* to_string(GroupState state);

struct OverlayGroup {
  std::string overlay_id;
  sim::NodeId rendezvous;
  std::vector<sim::NodeId> members;  // join order; never contains a TypeA node
  GroupState state = GroupState::Forming;
};

/// Application task handed to a member during overlay activation:
/// deploy `task` on sensor `target`, which is managed by `member`.
struct TaskDelivery {
  sim::NodeId member;
  sim::NodeId target;
  vrt::AppTask task;
};

/// Rendezvous-side state machine for one overlay. Owned by the application
/// machine on the rendezvous node; per-overlay state lives here.
class Rendezvous {
public:
  Rendezvous(sim::NodeId self, std::string overlay_id, std::string service_name,
             std::function<std::uint16_t()> next_mid);

  /// Three-step creation: resolve candidates in the registry and
  /// pre-configure (step 1), advertise over Ci / collect joins / deliver
  /// tasks (step 2). The group reaches Ready once every joined member
  /// acknowledged all its task deliveries; execution (step 3) then starts.
  /// Errors: NoCandidates. All candidates declining marks the group Failed.
  void start_create(sim::Simulator& simulator, const reg::Registry& registry,
                    const std::vector<sim::NodeId>& candidates,
                    const std::vector<TaskDelivery>& deliveries,
                    sim::Duration setup_cost, sim::Duration processing);

  /// Feed a delivery addressed to the rendezvous node; returns true when the
  /// message belonged to this overlay.
  bool on_delivery(sim::Simulator& simulator, const sim::Delivery& delivery);

  /// Relayed unicast fan-out to every member except the sender; returns the
  /// delivery count. Errors: NotMember (sender outside the group),
  /// OverlayNotReady (state < Ready).
  std::size_t multicast(sim::Simulator& simulator, const sim::NodeId& sender,
                        const nlohmann::json& body);

  const OverlayGroup& group() const { return group_; }
  bool is_member(const sim::NodeId& peer) const;
  std::optional<sim::SimTime> ready_at() const { return ready_at_; }
  sim::SimTime create_started_at() const { return create_started_; }
  bool all_declined() const;

  std::function<void(sim::SimTime)> on_ready;
  std::function<void(const sim::NodeId& member)> on_member_joined;
  std::function<void(const sim::NodeId& from, const nlohmann::json& body, sim::SimTime at)>
      on_direct_reply;

private:
  void send_advertise(sim::Simulator& simulator, const sim::NodeId& candidate);
  void admit(sim::Simulator& simulator, const sim::NodeId& peer);
  void deliver_tasks(sim::Simulator& simulator, const sim::NodeId& member);
  void maybe_ready(sim::Simulator& simulator, sim::SimTime at);
  void transition(GroupState next);

  sim::NodeId self_;
  std::string service_name_;
  std::function<std::uint16_t()> next_mid_;
  OverlayGroup group_;
  sim::Duration processing_ = 0;
  sim::SimTime create_started_ = 0;
  std::optional<sim::SimTime> ready_at_;
  std::vector<sim::NodeId> candidates_;
  std::set<sim::NodeId> declined_;
  std::vector<TaskDelivery> deliveries_;
  std::map<sim::NodeId, std::string> agent_ids_;                // target -> agent id
  std::map<std::uint16_t, sim::NodeId> pending_advertise_;      // mid -> candidate
  std::map<std::uint16_t, sim::NodeId> pending_join_ack_;       // mid -> member
  std::map<std::uint16_t, sim::NodeId> pending_deploy_;         // mid -> member
  std::map<sim::NodeId, std::size_t> outstanding_deploys_;      // member -> acks left
  std::set<sim::NodeId> activated_;                             // members past task delivery
};

/// Member-side overlay state for one host: stores received advertisements
/// and memberships, answers advertisements, and sends overlay traffic.
class EdgePeer {
public:
  EdgePeer(sim::NodeId self, std::function<std::uint16_t()> next_mid);

  bool accept_advertisements = true;

  /// Reply to an Advertise (the reply carries the join decision).
  void handle_advertise(sim::Simulator& simulator, const sim::Delivery& delivery);

  /// Feed any other overlay delivery addressed to this peer; returns true
  /// when consumed.
  bool on_delivery(sim::Simulator& simulator, const sim::Delivery& delivery);

  /// Standalone join using a stored advertisement. Errors: UnknownOverlay
  /// (no advertisement received), AlreadyMember.
  sim::SimTime join(sim::Simulator& simulator, const std::string& overlay_id);

  /// Reply outside the multicast, straight to the rendezvous peer.
  /// Errors: NotMember, UnknownOverlay.
  sim::SimTime direct_reply(sim::Simulator& simulator, const std::string& overlay_id,
                            const nlohmann::json& body);

  /// Member-to-member unicast inside the overlay. Errors: NotMember.
  sim::SimTime unicast(sim::Simulator& simulator, const std::string& overlay_id,
                       const sim::NodeId& member, const nlohmann::json& body);

  bool is_member(const std::string& overlay_id) const;
  const OverlayAdvertisement* advertisement(const std::string& overlay_id) const;
  std::vector<std::string> memberships() const;

  std::function<void(const std::string& overlay_id)> on_joined;
  std::function<void(const OverlayMessage& message, const sim::Delivery& delivery)>
      on_group_message;
  std::function<void(const OverlayMessage& message, const sim::Delivery& delivery)>
      on_peer_message;  // member-to-member traffic

private:
  sim::NodeId self_;
  std::function<std::uint16_t()> next_mid_;
  std::map<std::string, OverlayAdvertisement> advertisements_;
  std::set<std::string> memberships_;
  std::map<std::uint16_t, std::string> pending_join_;  // mid -> overlay id
};

}  // namespace vsn::overlay

#endif
