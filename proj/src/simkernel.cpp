#include "vsn/simkernel.hpp"

#include "vsn/errors.hpp"
#include "vsn/logging.hpp"

namespace vsn::sim {

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

const char* to_string(TraceType type) {
  switch (type) {
    case TraceType::Send: return "send";
    case TraceType::Deliver: return "deliver";
    case TraceType::Local: return "local";
  }
  return "?";
}

void Trace::append(TraceEntry entry) {
  entry.seq = entries_.size() + 1;
  entries_.push_back(std::move(entry));
}

std::string format_entry(const TraceEntry& entry) {
  std::string line;
  line += std::to_string(entry.seq);
  line += '|';
  line += to_string(entry.type);
  line += '|';
  line += std::to_string(entry.at);
  line += '|';
  line += entry.from;
  line += '|';
  line += entry.to;
  line += '|';
  line += entry.channel ? to_string(*entry.channel) : "";
  line += '|';
  line += entry.event ? std::to_string(entry.event) : "";
  line += '|';
  line += entry.code >= 0 ? std::to_string(entry.code) : "";
  line += '|';
  line += entry.content_format >= 0 ? std::to_string(entry.content_format) : "";
  line += '|';
  line += entry.tag;
  line += '|';
  line += entry.overlay;
  line += '|';
  line += entry.correlation;
  line += '|';
  line += entry.type == TraceType::Send ? std::to_string(entry.deliver_at) : "";
  return line;
}

void Simulator::add_node(const NodeId& id, Handler handler) {
  nodes_[id] = std::move(handler);
}

bool Simulator::has_node(const NodeId& id) const { return nodes_.count(id) > 0; }

void Simulator::set_handler(const NodeId& id, Handler handler) {
  if (!has_node(id)) fail(ErrorCode::UnknownNode, id);
  nodes_[id] = std::move(handler);
}

void Simulator::set_default_link(const LinkModel& link) { default_link_ = link; }

void Simulator::set_link(const NodeId& from, const NodeId& to, const LinkModel& link) {
  link_overrides_[{from, to}] = link;
}

void Simulator::set_link_down(const NodeId& from, const NodeId& to, bool down) {
  if (down)
    down_links_.insert({from, to});
  else
    down_links_.erase({from, to});
}

const LinkModel& Simulator::link_between(const NodeId& from, const NodeId& to) const {
  auto it = link_overrides_.find({from, to});
  return it != link_overrides_.end() ? it->second : default_link_;
}

EventId Simulator::schedule(SimTime fire_at, const NodeId& target, Packet packet) {
  if (fire_at < clock_)
    fail(ErrorCode::PastTime, "fire_at " + std::to_string(fire_at) + " < clock " +
                                  std::to_string(clock_));
  if (!has_node(target)) fail(ErrorCode::UnknownNode, target);
  EventId id = next_event_++;
  queue_.push(Pending{fire_at, id, target, target, std::move(packet)});
  return id;
}

Duration Simulator::jitter_for(const NodeId& from, const NodeId& to, const LinkModel& link) {
  if (link.jitter_max == 0) return 0;
  auto key = std::make_pair(from, to);
  auto it = jitter_rng_.find(key);
  if (it == jitter_rng_.end()) {
    std::uint64_t seed = link.jitter_seed ^ fnv1a(from + "|" + to);
    it = jitter_rng_.emplace(key, std::mt19937_64(seed)).first;
  }
  std::uniform_int_distribution<Duration> dist(0, link.jitter_max);
  return dist(it->second);
}

SimTime Simulator::send(const NodeId& from, const NodeId& to, Packet packet) {
  if (!has_node(from)) fail(ErrorCode::UnknownNode, from);
  if (!has_node(to)) fail(ErrorCode::UnknownNode, to);
  if (down_links_.count({from, to})) fail(ErrorCode::LinkDown, from + " -> " + to);

  const LinkModel& link = link_between(from, to);
  Duration delay = link.propagation + link.processing + packet.extra_delay;
  // Session setup is paid once per ordered pair, by initiated sends only;
  // replies ride the requester's connection.
  if (!packet.reply) {
    auto key = std::make_pair(from, to);
    if (!sessions_.count(key)) {
      delay += link.session_setup;
      sessions_.insert(key);
    }
  }
  delay += jitter_for(from, to, link);

  SimTime deliver_at = clock_ + delay;
  EventId id = next_event_++;

  TraceEntry entry;
  entry.type = TraceType::Send;
  entry.at = clock_;
  entry.from = from;
  entry.to = to;
  entry.event = id;
  entry.channel = packet.channel;
  entry.tag = packet.tag;
  entry.correlation = packet.correlation;
  entry.overlay = packet.overlay;
  entry.code = static_cast<int>(packet.msg.code);
  entry.content_format = packet.msg.content_format ? *packet.msg.content_format : -1;
  entry.deliver_at = deliver_at;
  trace_.append(std::move(entry));

  queue_.push(Pending{deliver_at, id, to, from, std::move(packet)});
  return deliver_at;
}

void Simulator::dispatch(const Pending& pending) {
  TraceEntry entry;
  entry.type = TraceType::Deliver;
  entry.at = pending.fire_at;
  entry.from = pending.source;
  entry.to = pending.target;
  entry.event = pending.id;
  entry.channel = pending.packet.channel;
  entry.tag = pending.packet.tag;
  entry.correlation = pending.packet.correlation;
  entry.overlay = pending.packet.overlay;
  if (pending.packet.channel) {
    entry.code = static_cast<int>(pending.packet.msg.code);
    entry.content_format =
        pending.packet.msg.content_format ? *pending.packet.msg.content_format : -1;
  }
  trace_.append(std::move(entry));

  auto it = nodes_.find(pending.target);
  if (it == nodes_.end() || !it->second) {
    VSN_WARN("dropping event for node without handler: " << pending.target);
    return;
  }
  Delivery delivery{pending.id, pending.fire_at, pending.source, pending.target,
                    pending.packet};
  it->second(delivery);
}

std::size_t Simulator::run_until(SimTime t) {
  if (t < clock_)
    fail(ErrorCode::PastTime,
         "run_until " + std::to_string(t) + " < clock " + std::to_string(clock_));
  std::size_t dispatched = 0;
  while (!queue_.empty() && queue_.top().fire_at <= t) {
    Pending pending = queue_.top();
    queue_.pop();
    clock_ = pending.fire_at;
    dispatch(pending);
    ++dispatched;
  }
  clock_ = t;
  return dispatched;
}

std::size_t Simulator::run_all() {
  std::size_t dispatched = 0;
  while (!queue_.empty()) {
    Pending pending = queue_.top();
    queue_.pop();
    clock_ = pending.fire_at;
    dispatch(pending);
    ++dispatched;
  }
  return dispatched;
}

bool Simulator::session_established(const NodeId& from, const NodeId& to) const {
  return sessions_.count({from, to}) > 0;
}

void Simulator::log_local(const NodeId& node, std::optional<ChannelKind> channel,
                          const std::string& tag, const std::string& correlation,
                          const std::string& overlay) {
  TraceEntry entry;
  entry.type = TraceType::Local;
  entry.at = clock_;
  entry.to = node;
  entry.channel = channel;
  entry.tag = tag;
  entry.correlation = correlation;
  entry.overlay = overlay;
  trace_.append(std::move(entry));
}

}  // namespace vsn::sim
