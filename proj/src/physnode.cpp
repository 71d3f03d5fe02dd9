#include "vsn/physnode.hpp"

#include <cmath>

#include "vsn/errors.hpp"

namespace vsn::phys {

const char* to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::TypeA: return "type_a";
    case NodeKind::TypeB: return "type_b";
    case NodeKind::Gto: return "gto";
  }
  return "?";
}

NodeKind node_kind_from_string(const std::string& s) {
  if (s == "type_a") return NodeKind::TypeA;
  if (s == "type_b") return NodeKind::TypeB;
  if (s == "gto") return NodeKind::Gto;
  fail(ErrorCode::ConfigInvalid, "unknown node kind \"" + s + "\"");
}

double distance(const Position& a, const Position& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

double Environment::temperature_at(const Position& p, sim::SimTime at) const {
  double t = ambient_c;
  if (fire && at >= fire->start) {
    double d = distance(p, fire->origin);
    double falloff = 1.0 - d / fire->falloff_radius_m;
    if (falloff > 0.0) t += fire->intensity_c * falloff;
  }
  return t;
}

void World::add_node(PhysicalNode node) {
  nodes_[node.id] = std::move(node);
}

bool World::has(const sim::NodeId& id) const { return nodes_.count(id) > 0; }

const PhysicalNode& World::node(const sim::NodeId& id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) fail(ErrorCode::UnknownNode, id);
  return it->second;
}

void World::validate() const {
  for (const auto& [id, node] : nodes_) {
    if (node.kind == NodeKind::TypeA) {
      if (!node.gto_ref) fail(ErrorCode::NoGto, id + " has no gateway reference");
      auto it = nodes_.find(*node.gto_ref);
      if (it == nodes_.end())
        fail(ErrorCode::NoGto, id + " references unknown gateway " + *node.gto_ref);
      if (it->second.kind == NodeKind::TypeA)
        fail(ErrorCode::NoGto, id + " references TypeA node " + *node.gto_ref);
    }
    if (node.max_tasks < 1) fail(ErrorCode::ConfigInvalid, id + " max_tasks < 1");
  }
}

wire::SenMLRecord World::sample(const sim::NodeId& id, const std::string& quantity,
                                sim::SimTime at) const {
  const PhysicalNode& n = node(id);
  if (quantity != "temperature")
    fail(ErrorCode::UnknownQuantity, quantity + " on " + id);
  wire::SenMLRecord record;
  record.base_name = n.id;
  record.name = quantity;
  record.unit = "Cel";
  record.value = environment_.temperature_at(n.position, at);
  record.time = sim::to_seconds(at);
  return record;
}

sim::SimTime World::delegate_to_gto(sim::Simulator& simulator, const sim::NodeId& id,
                                    sim::Packet packet) const {
  const PhysicalNode& n = node(id);
  if (n.kind != NodeKind::TypeA) fail(ErrorCode::NotTypeA, id);
  if (!n.gto_ref) fail(ErrorCode::NoGto, id + " has no gateway reference");
  auto it = nodes_.find(*n.gto_ref);
  if (it == nodes_.end() || it->second.kind == NodeKind::TypeA)
    fail(ErrorCode::NoGto, id + " gateway " + *n.gto_ref + " unusable");
  packet.channel = ChannelKind::Gi;
  return simulator.send(id, *n.gto_ref, std::move(packet));
}

}  // namespace vsn::phys
