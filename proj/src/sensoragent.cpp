#include "vsn/sensoragent.hpp"

#include <algorithm>

#include "vsn/errors.hpp"
#include "vsn/logging.hpp"

namespace vsn::agent {

using nlohmann::json;

std::vector<std::string> uri_for(const AgentBinding& binding, ChannelKind channel,
                                 const sim::NodeId& node) {
  if (channel != ChannelKind::Di && channel != ChannelKind::Ci)
    fail(ErrorCode::ProprietaryChannel,
         std::string(to_string(channel)) + " has no public URI");
  return {"agents", binding.agent_id, "nodes", node,
          channel == ChannelKind::Di ? "di" : "ci"};
}

json task_to_json(const vrt::AppTask& task) {
  json value = {{"task_id", task.task_id},
                {"app_id", task.app_id},
                {"quantity", task.quantity},
                {"period_ms", sim::to_ms(task.period)},
                {"priority", task.priority}};
  if (task.condition.kind == vrt::ReportCondition::Kind::Always)
    value["condition"] = "always";
  else
    value["condition"] = {{"threshold_above", task.condition.threshold}};
  if (task.notification)
    value["notification"] = {{"lambda_max", task.notification->lambda_max},
                             {"baseline_c", task.notification->baseline_c},
                             {"full_scale_c", task.notification->full_scale_c}};
  return value;
}

vrt::AppTask task_from_json(const json& value) {
  for (const char* field : {"task_id", "app_id", "quantity", "period_ms", "priority"})
    if (!value.contains(field))
      fail(ErrorCode::MalformedCommand, std::string("task missing \"") + field + "\"");
  vrt::AppTask task;
  task.task_id = value["task_id"].get<std::string>();
  task.app_id = value["app_id"].get<std::string>();
  task.quantity = value["quantity"].get<std::string>();
  double period_ms = value["period_ms"].get<double>();
  if (!(period_ms > 0)) fail(ErrorCode::MalformedCommand, "task period must be > 0");
  task.period = static_cast<sim::Duration>(period_ms * 1000.0 + 0.5);
  task.priority = value["priority"].get<int>();
  if (value.contains("condition")) {
    const auto& condition = value["condition"];
    if (condition.is_string() && condition == "always") {
      task.condition = vrt::ReportCondition::always();
    } else if (condition.is_object() && condition.contains("threshold_above")) {
      task.condition =
          vrt::ReportCondition::threshold_above(condition["threshold_above"].get<double>());
    } else {
      fail(ErrorCode::MalformedCommand, "bad task condition");
    }
  }
  if (value.contains("notification")) {
    const auto& notification = value["notification"];
    vrt::NotificationPolicy policy;
    policy.lambda_max = notification.value("lambda_max", 1.0);
    policy.baseline_c = notification.value("baseline_c", 0.0);
    policy.full_scale_c = notification.value("full_scale_c", 1.0);
    if (!(policy.lambda_max > 0) || !(policy.full_scale_c > 0))
      fail(ErrorCode::MalformedCommand, "bad notification policy");
    task.notification = policy;
  }
  return task;
}

std::string data_correlation(const std::string& task_id,
                             const std::vector<wire::SenMLRecord>& records) {
  if (records.empty()) return task_id;
  return task_id + ":" + records.front().base_name + "@" +
         wire::format_decimal(records.front().time);
}

Agent::Agent(AgentBinding binding, const phys::World* world)
    : binding_(std::move(binding)), world_(world) {}

bool Agent::manages(const sim::NodeId& node) const {
  return std::find(binding_.managed.begin(), binding_.managed.end(), node) !=
         binding_.managed.end();
}

void Agent::record_task(const sim::NodeId& node, const vrt::AppTask& task) {
  tasks_[node][task.task_id] = task;
}

void Agent::erase_task(const sim::NodeId& node, const std::string& task_id) {
  auto it = tasks_.find(node);
  if (it != tasks_.end()) it->second.erase(task_id);
}

const vrt::AppTask* Agent::task_for(const sim::NodeId& node,
                                    const std::string& task_id) const {
  auto it = tasks_.find(node);
  if (it == tasks_.end()) return nullptr;
  auto jt = it->second.find(task_id);
  return jt == it->second.end() ? nullptr : &jt->second;
}

sim::SimTime Agent::post_di(sim::Simulator& simulator, const vrt::AppTask& task,
                            const std::vector<wire::SenMLRecord>& records,
                            const AppDirectory& apps) {
  auto it = apps.find(task.app_id);
  if (it == apps.end()) fail(ErrorCode::UnknownTarget, "application " + task.app_id);

  wire::Message post;
  post.type = wire::MsgType::Confirmable;
  post.code = wire::Code::Post;
  post.message_id = next_mid();
  post.content_format = wire::kContentFormatSenmlJson;
  post.payload = wire::encode_senml(wire::MeasurementBatch{records});
  bool notification = task.notification.has_value();
  if (notification)
    post.uri_path = {"apps", task.app_id, "events", "fire"};
  else
    post.uri_path = {"apps", task.app_id, "data"};

  sim::Packet packet;
  packet.channel = ChannelKind::Di;
  packet.msg = post;
  packet.tag = notification ? "fire-event" : "data";
  packet.correlation = data_correlation(task.task_id, records);
  pending_di_[post.message_id] = {it->second, simulator.now()};
  return simulator.send(binding_.host, it->second, std::move(packet));
}

sim::SimTime Agent::ingest_pdi(sim::Simulator& simulator, const sim::NodeId& from,
                               const std::string& task_id,
                               const std::vector<wire::SenMLRecord>& records,
                               const AppDirectory& apps) {
  if (!manages(from)) fail(ErrorCode::UnmanagedNode, from);
  const vrt::AppTask* task = task_for(from, task_id);
  if (!task) fail(ErrorCode::UnknownTask, task_id + " from " + from);
  simulator.log_local(binding_.host, ChannelKind::PDi, "pdi-ingest",
                      data_correlation(task_id, records));
  return post_di(simulator, *task, records, apps);
}

sim::SimTime Agent::ingest_pdi_frame(sim::Simulator& simulator, const sim::NodeId& from,
                                     std::span<const std::uint8_t> frame,
                                     const AppDirectory& apps) {
  DialectReport report = dialect_decode(binding_.dialect, frame);
  return ingest_pdi(simulator, from, report.task_id, report.records, apps);
}

wire::Code Agent::apply_pci(const ControlCommand& command, vrt::NodeRuntime& runtime,
                            sim::SimTime now) {
  switch (command.verb) {
    case Verb::SetPriority:
      runtime.set_priority(command.args["task_id"].get<std::string>(),
                           command.args["priority"].get<int>());
      return wire::Code::Changed;
    case Verb::SetPeriod: {
      double period_ms = command.args["period_ms"].get<double>();
      if (!(period_ms > 0)) fail(ErrorCode::MalformedCommand, "period must be > 0");
      runtime.set_period(command.args["task_id"].get<std::string>(),
                         static_cast<sim::Duration>(period_ms * 1000.0 + 0.5));
      return wire::Code::Changed;
    }
    case Verb::DeployTask:
      runtime.deploy_task(task_from_json(command.args["task"]), now);
      return wire::Code::Created;
    case Verb::RemoveTask:
      runtime.remove_task(command.args["task_id"].get<std::string>());
      return wire::Code::Changed;
    case Verb::JoinOverlay:
      fail(ErrorCode::MalformedCommand, "join_overlay is not a node command");
  }
  fail(ErrorCode::MalformedCommand, "unhandled verb");
}

wire::Code response_code_for(const Error& error) {
  switch (error.code()) {
    case ErrorCode::UnknownTask:
    case ErrorCode::UnknownNode:
    case ErrorCode::UnknownTarget:
    case ErrorCode::UnknownOverlay:
      return wire::Code::NotFound;
    default:
      return wire::Code::BadRequest;
  }
}

namespace {

wire::Message make_response(const wire::Message& request, wire::Code code) {
  wire::Message response;
  response.type = wire::MsgType::Acknowledgement;
  response.code = code;
  response.message_id = request.message_id;
  response.token = request.token;
  return response;
}

}  // namespace

Agent::CiResult Agent::handle_ci(sim::Simulator& simulator, const ControlCommand& command,
                                 const wire::Message& request, const sim::NodeId& requester,
                                 vrt::NodeRuntime* local_runtime,
                                 const std::function<void()>& on_local_change) {
  if (!manages(command.target))
    return {make_response(request, wire::Code::NotFound), false};

  std::string correlation =
      std::string(to_string(command.verb)) + ":" + command.target;

  const phys::PhysicalNode& target = world_->node(command.target);
  if (target.kind == phys::NodeKind::TypeA) {
    // Map onto the proprietary control path across the Gi hop.
    auto document = encode_control(command);
    wire::Message gi;
    gi.type = wire::MsgType::Confirmable;
    gi.code = wire::Code::Post;
    gi.message_id = next_mid();
    gi.uri_path = {"gi", "ctrl"};
    gi.payload = dialect_wrap_control(binding_.dialect, document);

    sim::Packet packet;
    packet.channel = ChannelKind::Gi;
    packet.msg = gi;
    packet.tag = "gi-ctrl";
    packet.correlation = correlation;
    pending_gi_[gi.message_id] = PendingGi{requester, request.message_id, command};
    simulator.send(binding_.host, command.target, std::move(packet));
    return {std::nullopt, true};
  }

  if (!local_runtime)
    return {make_response(request, wire::Code::NotFound), false};

  try {
    wire::Code code = apply_pci(command, *local_runtime, simulator.now());
    simulator.log_local(binding_.host, ChannelKind::PCi, "pci-apply", correlation);
    if (command.verb == Verb::DeployTask)
      record_task(command.target, task_from_json(command.args["task"]));
    if (command.verb == Verb::RemoveTask)
      erase_task(command.target, command.args["task_id"].get<std::string>());
    if (on_local_change) on_local_change();
    return {make_response(request, code), false};
  } catch (const Error& error) {
    VSN_DEBUG("pci apply failed: " << error.what());
    return {make_response(request, response_code_for(error)), false};
  }
}

std::optional<Agent::DeferredResponse> Agent::complete_gi_ack(const wire::Message& gi_ack) {
  auto it = pending_gi_.find(gi_ack.message_id);
  if (it == pending_gi_.end()) return std::nullopt;
  PendingGi pending = it->second;
  pending_gi_.erase(it);

  if (wire::code_class(gi_ack.code) == 2) {
    if (pending.command.verb == Verb::DeployTask)
      record_task(pending.command.target, task_from_json(pending.command.args["task"]));
    if (pending.command.verb == Verb::RemoveTask)
      erase_task(pending.command.target,
                 pending.command.args["task_id"].get<std::string>());
  }

  wire::Message response;
  response.type = wire::MsgType::Acknowledgement;
  response.code = gi_ack.code;
  response.message_id = pending.request_mid;
  return DeferredResponse{pending.requester, response};
}

bool Agent::record_di_ack(const wire::Message& ack, sim::SimTime at) {
  auto it = pending_di_.find(ack.message_id);
  if (it == pending_di_.end()) return false;
  auto [peer, sent] = it->second;
  pending_di_.erase(it);
  if (on_di_exchange) on_di_exchange(peer, sent, at);
  return true;
}

}  // namespace vsn::agent
