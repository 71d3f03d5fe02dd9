#ifndef VSN_PHYSNODE_HPP
#define VSN_PHYSNODE_HPP

#include <map>
#include <optional>
#include <string>

#include "vsn/senml.hpp"
#include "vsn/simkernel.hpp"

namespace vsn::phys {

enum class NodeKind { TypeA, TypeB, Gto };

const char* to_string(NodeKind kind);
NodeKind node_kind_from_string(const std::string& s);

struct Position {
  double x = 0.0;
  double y = 0.0;

  bool operator==(const Position&) const = default;
};

double distance(const Position& a, const Position& b);

constexpr int kDefaultMaxTasksTypeA = 2;
constexpr int kDefaultMaxTasksCapable = 8;

struct PhysicalNode {
  sim::NodeId id;
  NodeKind kind = NodeKind::TypeA;
  Position position;
  std::optional<sim::NodeId> gto_ref;  // required for TypeA
  int max_tasks = kDefaultMaxTasksTypeA;
};

/// Static fire: ignites at `start` and holds a linear temperature falloff
/// around the origin. Evolution is observed through sampling cadence.
struct Fire {
  Position origin;
  sim::SimTime start = 0;
  double intensity_c = 0.0;      // added degrees at the origin
  double falloff_radius_m = 1.0; // reading returns to ambient at this distance
};

struct Environment {
  double ambient_c = 20.0;
  std::optional<Fire> fire;

  /// ambient + intensity * max(0, 1 - d/R) once the fire has started.
  double temperature_at(const Position& p, sim::SimTime at) const;
};

/// Node roster plus the simulated environment they sense.
class World {
public:
  void add_node(PhysicalNode node);
  bool has(const sim::NodeId& id) const;
  const PhysicalNode& node(const sim::NodeId& id) const;  // UnknownNode
  const std::map<sim::NodeId, PhysicalNode>& nodes() const { return nodes_; }

  Environment& environment() { return environment_; }
  const Environment& environment() const { return environment_; }

  /// Checks TypeA gto_ref integrity for the whole roster.
  void validate() const;

  /// Sample one quantity at a node's position. Only "temperature" is sensed.
  wire::SenMLRecord sample(const sim::NodeId& id, const std::string& quantity,
                           sim::SimTime at) const;

  /// Forward a message from a TypeA node over Gi to its gateway.
  sim::SimTime delegate_to_gto(sim::Simulator& simulator, const sim::NodeId& id,
                               sim::Packet packet) const;

private:
  std::map<sim::NodeId, PhysicalNode> nodes_;
  Environment environment_;
};

}  // namespace vsn::phys

#endif
