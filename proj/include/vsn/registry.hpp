#ifndef VSN_REGISTRY_HPP
#define VSN_REGISTRY_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vsn/physnode.hpp"

#include "json.hpp"

namespace vsn::reg {

/// Axis-aligned rectangle, inclusive on all edges.
struct Region {
  double min_x = 0, min_y = 0, max_x = 0, max_y = 0;
  bool contains(const phys::Position& p) const {
    return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
  }
};

struct SensorDescriptor {
  sim::NodeId id;
  phys::NodeKind kind = phys::NodeKind::TypeA;
  std::vector<std::string> quantities;
  phys::Position position;
  std::string agent;  // agent id responsible for this node
  std::string owner;

  bool operator==(const SensorDescriptor&) const = default;
};

struct Criteria {
  std::optional<std::string> quantity;
  std::optional<phys::NodeKind> kind;
  std::optional<Region> region;
  std::optional<std::string> owner;
};

/// Sensor repository: static publication of descriptors, queried by
/// applications during overlay pre-configuration.
class Registry {
public:
  /// Stores the descriptor; immediately queryable. Returns a registration id.
  std::uint64_t register_descriptor(const SensorDescriptor& descriptor);

  std::optional<SensorDescriptor> lookup(const sim::NodeId& id) const;

  /// All and only descriptors matching every provided criterion, by node id.
  std::vector<SensorDescriptor> query(const Criteria& criteria) const;

  std::size_t size() const { return descriptors_.size(); }

  nlohmann::json to_json() const;
  static Registry from_json(const nlohmann::json& roster);

private:
  std::map<sim::NodeId, SensorDescriptor> descriptors_;
  std::uint64_t next_registration_ = 1;
};

}  // namespace vsn::reg

#endif
