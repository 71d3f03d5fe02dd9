#include "vsn/registry.hpp"

#include "vsn/errors.hpp"

namespace vsn::reg {

using nlohmann::json;

std::uint64_t Registry::register_descriptor(const SensorDescriptor& descriptor) {
  if (descriptors_.count(descriptor.id))
    fail(ErrorCode::DuplicateRegistration, descriptor.id);
  if (descriptor.kind != phys::NodeKind::Gto && descriptor.quantities.empty())
    fail(ErrorCode::ConfigInvalid, descriptor.id + " sensor registered without quantities");
  descriptors_[descriptor.id] = descriptor;
  return next_registration_++;
}

std::optional<SensorDescriptor> Registry::lookup(const sim::NodeId& id) const {
  auto it = descriptors_.find(id);
  if (it == descriptors_.end()) return std::nullopt;
  return it->second;
}

std::vector<SensorDescriptor> Registry::query(const Criteria& criteria) const {
  std::vector<SensorDescriptor> out;
  for (const auto& [id, d] : descriptors_) {  // std::map keeps node-id order
    if (criteria.quantity) {
      bool found = false;
      for (const auto& q : d.quantities) found = found || q == *criteria.quantity;
      if (!found) continue;
    }
    if (criteria.kind && d.kind != *criteria.kind) continue;
    if (criteria.region && !criteria.region->contains(d.position)) continue;
    if (criteria.owner && d.owner != *criteria.owner) continue;
    out.push_back(d);
  }
  return out;
}

json Registry::to_json() const {
  json roster = json::array();
  for (const auto& [id, d] : descriptors_) {
    json quantities = json::array();
    for (const auto& q : d.quantities) quantities.push_back(q);
    roster.push_back({{"id", d.id},
                      {"kind", phys::to_string(d.kind)},
                      {"quantities", quantities},
                      {"position", {{"x", d.position.x}, {"y", d.position.y}}},
                      {"agent", d.agent},
                      {"owner", d.owner}});
  }
  return roster;
}

Registry Registry::from_json(const json& roster) {
  if (!roster.is_array()) fail(ErrorCode::ConfigInvalid, "roster must be a JSON array");
  Registry registry;
  for (const auto& item : roster) {
    SensorDescriptor d;
    for (const char* field : {"id", "kind", "quantities", "position", "agent", "owner"})
      if (!item.contains(field))
        fail(ErrorCode::ConfigInvalid, std::string("descriptor missing \"") + field + "\"");
    d.id = item["id"].get<std::string>();
    d.kind = phys::node_kind_from_string(item["kind"].get<std::string>());
    for (const auto& q : item["quantities"]) d.quantities.push_back(q.get<std::string>());
    d.position.x = item["position"]["x"].get<double>();
    d.position.y = item["position"]["y"].get<double>();
    d.agent = item["agent"].get<std::string>();
    d.owner = item["owner"].get<std::string>();
    registry.register_descriptor(d);
  }
  return registry;
}

}  // namespace vsn::reg
