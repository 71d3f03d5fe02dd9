#include "vsn/overlaynet.hpp"

#include <algorithm>

#include "vsn/errors.hpp"
#include "vsn/logging.hpp"
#include "vsn/sensoragent.hpp"

namespace vsn::overlay {

using nlohmann::json;

const char* to_string(MsgKind kind) {
  switch (kind) {
    case MsgKind::Advertise: return "advertise";
    case MsgKind::JoinRequest: return "join-request";
    case MsgKind::JoinAck: return "join-ack";
    case MsgKind::GroupMulticast: return "group-multicast";
    case MsgKind::DirectReply: return "direct-reply";
  }
  return "?";
}

const char* to_string(GroupState state) {
  switch (state) {
    case GroupState::Forming: return "forming";
    case GroupState::Ready: return "ready";
    case GroupState::Active: return "active";
    case GroupState::Failed: return "failed";
  }
  return "?";
}

std::vector<std::uint8_t> encode_overlay(const OverlayMessage& message) {
  json document = {{"overlay_id", message.overlay_id},
                   {"sender", message.sender},
                   {"body", message.body}};
  std::string text = document.dump();
  std::vector<std::uint8_t> out;
  out.push_back(static_cast<std::uint8_t>(message.kind));
  out.insert(out.end(), text.begin(), text.end());
  return out;
}

OverlayMessage decode_overlay(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) fail(ErrorCode::Truncated, "empty overlay payload");
  std::uint8_t tag = bytes[0];
  if (tag < 1 || tag > 5) fail(ErrorCode::MalformedJson, "unknown overlay tag");
  json document = json::parse(bytes.begin() + 1, bytes.end(), nullptr, false);
  if (document.is_discarded() || !document.is_object() || !document.contains("overlay_id") ||
      !document.contains("sender") || !document.contains("body"))
    fail(ErrorCode::MalformedJson, "bad overlay document");
  OverlayMessage message;
  message.kind = static_cast<MsgKind>(tag);
  message.overlay_id = document["overlay_id"].get<std::string>();
  message.sender = document["sender"].get<std::string>();
  message.body = document["body"];
  return message;
}

namespace {

sim::Packet overlay_packet(const OverlayMessage& message, std::uint16_t mid,
                           sim::Duration processing, bool reply = false,
                           wire::Code code = wire::Code::Post) {
  wire::Message msg;
  msg.type = reply ? wire::MsgType::Acknowledgement : wire::MsgType::Confirmable;
  msg.code = code;
  msg.message_id = mid;
  if (!reply) msg.uri_path = {"overlay", message.overlay_id};
  msg.payload = encode_overlay(message);

  sim::Packet packet;
  packet.channel = ChannelKind::Ci;
  packet.msg = std::move(msg);
  packet.reply = reply;
  packet.extra_delay = processing;
  packet.tag = to_string(message.kind);
  packet.correlation = to_string(message.kind);
  packet.overlay = message.overlay_id;
  return packet;
}

sim::Packet plain_ack(const wire::Message& request, wire::Code code,
                      const std::string& overlay_id, const std::string& tag) {
  wire::Message msg;
  msg.type = wire::MsgType::Acknowledgement;
  msg.code = code;
  msg.message_id = request.message_id;
  msg.token = request.token;

  sim::Packet packet;
  packet.channel = ChannelKind::Ci;
  packet.msg = std::move(msg);
  packet.reply = true;
  packet.tag = tag;
  packet.overlay = overlay_id;
  return packet;
}

}  // namespace

// ---------------- Rendezvous ----------------

Rendezvous::Rendezvous(sim::NodeId self, std::string overlay_id, std::string service_name,
                       std::function<std::uint16_t()> next_mid)
    : self_(std::move(self)), service_name_(std::move(service_name)),
      next_mid_(std::move(next_mid)) {
  if (service_name_.empty()) fail(ErrorCode::ConfigInvalid, "service name empty");
  group_.overlay_id = std::move(overlay_id);
  group_.rendezvous = self_;
}

void Rendezvous::transition(GroupState next) {
  // Forming -> Ready -> Active is the only forward path.
  bool ok = (group_.state == GroupState::Forming &&
             (next == GroupState::Ready || next == GroupState::Failed)) ||
            (group_.state == GroupState::Ready && next == GroupState::Active);
  if (!ok && group_.state != next)
    fail(ErrorCode::ConfigInvalid, std::string("bad overlay state transition ") +
                                       to_string(group_.state) + " -> " + to_string(next));
  group_.state = next;
}

void Rendezvous::start_create(sim::Simulator& simulator, const reg::Registry& registry,
                              const std::vector<sim::NodeId>& candidates,
                              const std::vector<TaskDelivery>& deliveries,
                              sim::Duration setup_cost, sim::Duration processing) {
  if (candidates.empty()) fail(ErrorCode::NoCandidates, group_.overlay_id);
  create_started_ = simulator.now();
  processing_ = processing;
  deliveries_ = deliveries;
  simulator.log_local(self_, std::nullopt, "overlay-create-start", "", group_.overlay_id);

  // Step one: resolve the candidates and pre-configure.
  for (const auto& candidate : candidates) {
    auto descriptor = registry.lookup(candidate);
    if (!descriptor) {
      VSN_WARN("overlay candidate not in registry, skipped: " << candidate);
      continue;
    }
    candidates_.push_back(candidate);
    simulator.log_local(self_, std::nullopt, "discovery", candidate, group_.overlay_id);
  }
  if (candidates_.empty()) fail(ErrorCode::NoCandidates, group_.overlay_id + " unresolved");
  for (const auto& delivery : deliveries_) {
    if (auto descriptor = registry.lookup(delivery.target))
      agent_ids_[delivery.target] = descriptor->agent;
  }

  // Local pre-configuration cost, then step two: advertise over Ci.
  sim::Packet timer;
  timer.tag = "timer:advertise";
  timer.overlay = group_.overlay_id;
  simulator.schedule(simulator.now() + setup_cost, self_, std::move(timer));
}

void Rendezvous::send_advertise(sim::Simulator& simulator, const sim::NodeId& candidate) {
  OverlayMessage message;
  message.kind = MsgKind::Advertise;
  message.overlay_id = group_.overlay_id;
  message.sender = self_;
  message.body = {{"service_name", service_name_},
                  {"rendezvous", self_},
                  {"created_at", create_started_},
                  {"processing_us", processing_}};
  std::uint16_t mid = next_mid_();
  pending_advertise_[mid] = candidate;
  simulator.send(self_, candidate, overlay_packet(message, mid, processing_));
}

void Rendezvous::admit(sim::Simulator& simulator, const sim::NodeId& peer) {
  if (is_member(peer)) fail(ErrorCode::AlreadyMember, peer);
  if (peer == self_) fail(ErrorCode::ConfigInvalid, "rendezvous cannot join own group");
  group_.members.push_back(peer);
  simulator.log_local(self_, std::nullopt, "member-added", peer, group_.overlay_id);
  if (on_member_joined) on_member_joined(peer);

  OverlayMessage message;
  message.kind = MsgKind::JoinAck;
  message.overlay_id = group_.overlay_id;
  message.sender = self_;
  message.body = {{"member", peer}};
  std::uint16_t mid = next_mid_();
  pending_join_ack_[mid] = peer;
  simulator.send(self_, peer, overlay_packet(message, mid, processing_));
}

void Rendezvous::deliver_tasks(sim::Simulator& simulator, const sim::NodeId& member) {
  std::size_t outstanding = 0;
  for (const auto& delivery : deliveries_) {
    if (delivery.member != member) continue;
    agent::ControlCommand command;
    command.verb = agent::Verb::DeployTask;
    command.target = delivery.target;
    command.args = {{"task", agent::task_to_json(delivery.task)}};

    auto agent_it = agent_ids_.find(delivery.target);
    std::string agent_id = agent_it != agent_ids_.end() ? agent_it->second : member;

    wire::Message request;
    request.type = wire::MsgType::Confirmable;
    request.code = wire::Code::Post;
    request.message_id = next_mid_();
    request.uri_path = {"agents", agent_id, "nodes", delivery.target, "ci"};
    request.content_format = wire::kContentFormatJson;
    request.payload = agent::encode_control(command);

    sim::Packet packet;
    packet.channel = ChannelKind::Ci;
    packet.msg = std::move(request);
    packet.extra_delay = processing_;
    packet.tag = "task-delivery";
    packet.correlation = delivery.task.task_id + ":" + delivery.target;
    packet.overlay = group_.overlay_id;
    pending_deploy_[packet.msg.message_id] = member;
    ++outstanding;
    simulator.send(self_, member, std::move(packet));
  }
  outstanding_deploys_[member] = outstanding;
  if (outstanding == 0) {
    activated_.insert(member);
    maybe_ready(simulator, simulator.now());
  }
}

void Rendezvous::maybe_ready(sim::Simulator& simulator, sim::SimTime at) {
  if (group_.state != GroupState::Forming) return;
  if (pending_advertise_.empty() && activated_.size() == group_.members.size() &&
      !group_.members.empty()) {
    transition(GroupState::Ready);
    ready_at_ = at;
    simulator.log_local(self_, std::nullopt, "overlay-ready", "", group_.overlay_id);
    if (on_ready) on_ready(at);
  }
}

bool Rendezvous::all_declined() const {
  return group_.state == GroupState::Failed ||
         (pending_advertise_.empty() && !candidates_.empty() &&
          declined_.size() == candidates_.size());
}

bool Rendezvous::is_member(const sim::NodeId& peer) const {
  return std::find(group_.members.begin(), group_.members.end(), peer) !=
         group_.members.end();
}

bool Rendezvous::on_delivery(sim::Simulator& simulator, const sim::Delivery& delivery) {
  const wire::Message& msg = delivery.packet.msg;

  if (delivery.packet.tag == "timer:advertise" &&
      delivery.packet.overlay == group_.overlay_id) {
    for (const auto& candidate : candidates_) send_advertise(simulator, candidate);
    return true;
  }

  if (msg.type == wire::MsgType::Acknowledgement) {
    if (auto it = pending_advertise_.find(msg.message_id); it != pending_advertise_.end()) {
      sim::NodeId candidate = it->second;
      pending_advertise_.erase(it);
      bool accepted = false;
      if (!msg.payload.empty()) {
        OverlayMessage reply = decode_overlay(msg.payload);
        accepted = reply.kind == MsgKind::JoinRequest && reply.body.value("accept", false);
      }
      if (accepted) {
        admit(simulator, candidate);
      } else {
        declined_.insert(candidate);
        VSN_INFO("overlay " << group_.overlay_id << ": " << candidate << " declined");
        if (declined_.size() == candidates_.size()) transition(GroupState::Failed);
        maybe_ready(simulator, delivery.at);
      }
      return true;
    }
    if (auto it = pending_join_ack_.find(msg.message_id); it != pending_join_ack_.end()) {
      sim::NodeId member = it->second;
      pending_join_ack_.erase(it);
      deliver_tasks(simulator, member);
      return true;
    }
    if (auto it = pending_deploy_.find(msg.message_id); it != pending_deploy_.end()) {
      sim::NodeId member = it->second;
      pending_deploy_.erase(it);
      if (wire::code_class(msg.code) != 2)
        VSN_WARN("task delivery rejected by " << member << ": " << wire::code_string(msg.code));
      auto& outstanding = outstanding_deploys_[member];
      if (outstanding > 0 && --outstanding == 0) {
        activated_.insert(member);
        maybe_ready(simulator, delivery.at);
      }
      return true;
    }
    return false;
  }

  if (msg.payload.empty()) return false;
  if (msg.uri_path.empty() || msg.uri_path[0] != "overlay") return false;
  OverlayMessage message = decode_overlay(msg.payload);
  if (message.overlay_id != group_.overlay_id) return false;

  switch (message.kind) {
    case MsgKind::JoinRequest: {
      // Standalone join (outside the advertise reply path).
      if (is_member(message.sender)) {
        simulator.send(self_, delivery.from,
                       plain_ack(msg, wire::Code::BadRequest, group_.overlay_id, "join-nack"));
        return true;
      }
      OverlayMessage ack;
      ack.kind = MsgKind::JoinAck;
      ack.overlay_id = group_.overlay_id;
      ack.sender = self_;
      ack.body = {{"member", message.sender}};
      group_.members.push_back(message.sender);
      simulator.log_local(self_, std::nullopt, "member-added", message.sender,
                          group_.overlay_id);
      if (on_member_joined) on_member_joined(message.sender);
      simulator.send(self_, delivery.from,
                     overlay_packet(ack, msg.message_id, processing_, true,
                                    wire::Code::Created));
      return true;
    }
    case MsgKind::GroupMulticast: {
      // Member-initiated multicast, relayed by the rendezvous.
      simulator.send(self_, delivery.from,
                     plain_ack(msg, wire::Code::Changed, group_.overlay_id, "mcast-ack"));
      multicast(simulator, message.sender, message.body);
      return true;
    }
    case MsgKind::DirectReply: {
      simulator.send(self_, delivery.from,
                     plain_ack(msg, wire::Code::Changed, group_.overlay_id, "reply-ack"));
      if (on_direct_reply) on_direct_reply(message.sender, message.body, delivery.at);
      return true;
    }
    default:
      return false;
  }
}

std::size_t Rendezvous::multicast(sim::Simulator& simulator, const sim::NodeId& sender,
                                  const nlohmann::json& body) {
  if (group_.state != GroupState::Ready && group_.state != GroupState::Active)
    fail(ErrorCode::OverlayNotReady, group_.overlay_id);
  if (sender != self_ && !is_member(sender)) fail(ErrorCode::NotMember, sender);
  if (group_.state == GroupState::Ready) transition(GroupState::Active);

  OverlayMessage message;
  message.kind = MsgKind::GroupMulticast;
  message.overlay_id = group_.overlay_id;
  message.sender = sender;
  message.body = body;

  std::size_t count = 0;
  for (const auto& member : group_.members) {
    if (member == sender) continue;
    simulator.send(self_, member, overlay_packet(message, next_mid_(), processing_));
    ++count;
  }
  return count;
}

// ---------------- EdgePeer ----------------

EdgePeer::EdgePeer(sim::NodeId self, std::function<std::uint16_t()> next_mid)
    : self_(std::move(self)), next_mid_(std::move(next_mid)) {}

void EdgePeer::handle_advertise(sim::Simulator& simulator, const sim::Delivery& delivery) {
  OverlayMessage message = decode_overlay(delivery.packet.msg.payload);
  OverlayAdvertisement advertisement;
  advertisement.overlay_id = message.overlay_id;
  advertisement.service_name = message.body.value("service_name", "");
  advertisement.rendezvous = message.body.value("rendezvous", message.sender);
  advertisement.created_at = message.body.value("created_at", std::uint64_t{0});
  advertisement.processing = message.body.value("processing_us", std::uint64_t{0});
  advertisements_[advertisement.overlay_id] = advertisement;

  // The reply to the advertisement carries the join decision.
  OverlayMessage reply;
  reply.kind = MsgKind::JoinRequest;
  reply.overlay_id = message.overlay_id;
  reply.sender = self_;
  reply.body = {{"accept", accept_advertisements}};
  simulator.send(self_, delivery.from,
                 overlay_packet(reply, delivery.packet.msg.message_id,
                                advertisement.processing, true, wire::Code::Content));
}

bool EdgePeer::on_delivery(sim::Simulator& simulator, const sim::Delivery& delivery) {
  const wire::Message& msg = delivery.packet.msg;

  if (msg.type == wire::MsgType::Acknowledgement) {
    auto it = pending_join_.find(msg.message_id);
    if (it == pending_join_.end()) return false;
    std::string overlay_id = it->second;
    pending_join_.erase(it);
    if (wire::code_class(msg.code) == 2) {
      memberships_.insert(overlay_id);
      if (on_joined) on_joined(overlay_id);
    } else {
      VSN_WARN("join rejected for " << overlay_id);
    }
    return true;
  }

  if (msg.payload.empty()) return false;
  if (msg.uri_path.empty() || msg.uri_path[0] != "overlay") return false;
  OverlayMessage message = decode_overlay(msg.payload);

  switch (message.kind) {
    case MsgKind::Advertise:
      handle_advertise(simulator, delivery);
      return true;
    case MsgKind::JoinAck:
      simulator.send(self_, delivery.from,
                     plain_ack(msg, wire::Code::Changed, message.overlay_id, "joinack-ack"));
      memberships_.insert(message.overlay_id);
      if (on_joined) on_joined(message.overlay_id);
      return true;
    case MsgKind::GroupMulticast:
      simulator.send(self_, delivery.from,
                     plain_ack(msg, wire::Code::Changed, message.overlay_id, "mcast-ack"));
      if (on_group_message) on_group_message(message, delivery);
      return true;
    case MsgKind::DirectReply:
      // Member-to-member unicast arrives as a direct message.
      simulator.send(self_, delivery.from,
                     plain_ack(msg, wire::Code::Changed, message.overlay_id, "uni-ack"));
      if (!is_member(message.overlay_id)) {
        VSN_WARN("peer message for overlay we are not part of: " << message.overlay_id);
        return true;
      }
      if (on_peer_message) on_peer_message(message, delivery);
      return true;
    default:
      return false;
  }
}

sim::SimTime EdgePeer::join(sim::Simulator& simulator, const std::string& overlay_id) {
  auto it = advertisements_.find(overlay_id);
  if (it == advertisements_.end())
    fail(ErrorCode::UnknownOverlay, overlay_id + " (no advertisement received)");
  if (memberships_.count(overlay_id)) fail(ErrorCode::AlreadyMember, overlay_id);

  OverlayMessage message;
  message.kind = MsgKind::JoinRequest;
  message.overlay_id = overlay_id;
  message.sender = self_;
  message.body = {{"accept", true}};
  std::uint16_t mid = next_mid_();
  pending_join_[mid] = overlay_id;
  return simulator.send(self_, it->second.rendezvous,
                        overlay_packet(message, mid, it->second.processing));
}

sim::SimTime EdgePeer::direct_reply(sim::Simulator& simulator, const std::string& overlay_id,
                                    const nlohmann::json& body) {
  auto it = advertisements_.find(overlay_id);
  if (it == advertisements_.end()) fail(ErrorCode::UnknownOverlay, overlay_id);
  if (!memberships_.count(overlay_id)) fail(ErrorCode::NotMember, self_);

  OverlayMessage message;
  message.kind = MsgKind::DirectReply;
  message.overlay_id = overlay_id;
  message.sender = self_;
  message.body = body;
  return simulator.send(self_, it->second.rendezvous,
                        overlay_packet(message, next_mid_(), it->second.processing));
}

sim::SimTime EdgePeer::unicast(sim::Simulator& simulator, const std::string& overlay_id,
                               const sim::NodeId& member, const nlohmann::json& body) {
  if (!memberships_.count(overlay_id)) fail(ErrorCode::NotMember, self_);
  auto it = advertisements_.find(overlay_id);
  if (it == advertisements_.end()) fail(ErrorCode::UnknownOverlay, overlay_id);

  OverlayMessage message;
  message.kind = MsgKind::DirectReply;
  message.overlay_id = overlay_id;
  message.sender = self_;
  message.body = body;
  return simulator.send(self_, member,
                        overlay_packet(message, next_mid_(), it->second.processing));
}

bool EdgePeer::is_member(const std::string& overlay_id) const {
  return memberships_.count(overlay_id) > 0;
}

const OverlayAdvertisement* EdgePeer::advertisement(const std::string& overlay_id) const {
  auto it = advertisements_.find(overlay_id);
  return it == advertisements_.end() ? nullptr : &it->second;
}

std::vector<std::string> EdgePeer::memberships() const {
  return {memberships_.begin(), memberships_.end()};
}

}  // namespace vsn::overlay
