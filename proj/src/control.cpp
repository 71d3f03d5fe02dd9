#include "vsn/control.hpp"

#include "vsn/errors.hpp"

namespace vsn::agent {

using nlohmann::json;

const char* to_string(Verb verb) {
  switch (verb) {
    case Verb::SetPriority: return "set_priority";
    case Verb::SetPeriod: return "set_period";
    case Verb::DeployTask: return "deploy_task";
    case Verb::RemoveTask: return "remove_task";
    case Verb::JoinOverlay: return "join_overlay";
  }
  return "?";
}

Verb verb_from_string(const std::string& s) {
  if (s == "set_priority") return Verb::SetPriority;
  if (s == "set_period") return Verb::SetPeriod;
  if (s == "deploy_task") return Verb::DeployTask;
  if (s == "remove_task") return Verb::RemoveTask;
  if (s == "join_overlay") return Verb::JoinOverlay;
  fail(ErrorCode::MalformedCommand, "unknown verb \"" + s + "\"");
}

namespace {

// Required argument fields per verb; extra fields are allowed.
void check_args(Verb verb, const json& args) {
  auto need = [&](std::initializer_list<const char*> fields) {
    for (const char* f : fields)
      if (!args.contains(f))
        fail(ErrorCode::MalformedCommand,
             std::string(to_string(verb)) + " missing argument \"" + f + "\"");
  };
  switch (verb) {
    case Verb::SetPriority: need({"task_id", "priority"}); break;
    case Verb::SetPeriod: need({"task_id", "period_ms"}); break;
    case Verb::DeployTask: need({"task"}); break;
    case Verb::RemoveTask: need({"task_id"}); break;
    case Verb::JoinOverlay: need({"overlay_id"}); break;
  }
}

}  // namespace

std::vector<std::uint8_t> encode_control(const ControlCommand& command) {
  check_args(command.verb, command.args);
  json document = {{"verb", to_string(command.verb)},
                   {"target", command.target},
                   {"args", command.args}};
  std::string text = document.dump();
  return {text.begin(), text.end()};
}

ControlCommand decode_control(std::span<const std::uint8_t> bytes) {
  json document = json::parse(bytes.begin(), bytes.end(), nullptr, false);
  if (document.is_discarded() || !document.is_object())
    fail(ErrorCode::MalformedCommand, "control document is not a JSON object");
  for (const char* field : {"verb", "target", "args"})
    if (!document.contains(field))
      fail(ErrorCode::MalformedCommand, std::string("missing \"") + field + "\"");
  if (!document["verb"].is_string() || !document["target"].is_string() ||
      !document["args"].is_object())
    fail(ErrorCode::MalformedCommand, "control document field has wrong type");

  ControlCommand command;
  command.verb = verb_from_string(document["verb"].get<std::string>());
  command.target = document["target"].get<std::string>();
  command.args = document["args"];
  check_args(command.verb, command.args);
  return command;
}

}  // namespace vsn::agent
