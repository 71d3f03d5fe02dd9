#ifndef VSN_CONTROL_HPP
#define VSN_CONTROL_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vsn/simkernel.hpp"

#include "json.hpp"

namespace vsn::agent {

enum class Verb { SetPriority, SetPeriod, DeployTask, RemoveTask, JoinOverlay };

const char* to_string(Verb verb);
Verb verb_from_string(const std::string& s);  // MalformedCommand

/// Compact JSON control document: {"verb": ..., "target": ..., "args": {...}}.
struct ControlCommand {
  Verb verb = Verb::SetPriority;
  sim::NodeId target;
  nlohmann::json args = nlohmann::json::object();
};

std::vector<std::uint8_t> encode_control(const ControlCommand& command);
ControlCommand decode_control(std::span<const std::uint8_t> bytes);  // MalformedCommand

}  // namespace vsn::agent

#endif
