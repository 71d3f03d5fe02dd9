#include "vsn/harness/machines.hpp"

#include <algorithm>

#include "vsn/errors.hpp"
#include "vsn/logging.hpp"

namespace vsn::harness {

using nlohmann::json;

namespace {

sim::Packet ack_packet(const wire::Message& request, wire::Code code, ChannelKind channel,
                       const std::string& tag, const std::string& correlation = "",
                       const std::string& overlay = "") {
  wire::Message response;
  response.type = wire::MsgType::Acknowledgement;
  response.code = code;
  response.message_id = request.message_id;
  response.token = request.token;

  sim::Packet packet;
  packet.channel = channel;
  packet.msg = std::move(response);
  packet.reply = true;
  packet.tag = tag;
  packet.correlation = correlation;
  packet.overlay = overlay;
  return packet;
}

sim::SimTime micros_of_seconds(double seconds) {
  return static_cast<sim::SimTime>(seconds * 1e6 + 0.5);
}

std::string emit_correlation(const vrt::Emission& emission) {
  return agent::data_correlation(emission.task_id, {emission.record}) + "=" +
         wire::format_decimal(emission.record.value);
}

}  // namespace

std::vector<overlay::TaskDelivery> resolve_deliveries(const RunContext& ctx,
                                                      const OverlayConfig& overlay) {
  std::vector<overlay::TaskDelivery> deliveries;
  for (const auto& ref : overlay.tasks) {
    const vrt::AppTask* task = nullptr;
    for (const auto& t : ctx.config->tasks)
      if (t.task.task_id == ref.task_id) task = &t.task;
    if (!task) continue;

    std::vector<sim::NodeId> targets = ref.targets;
    if (targets.empty()) {
      for (const auto& candidate : overlay.candidates) {
        auto it = ctx.managed.find(candidate);
        if (it != ctx.managed.end())
          targets.insert(targets.end(), it->second.begin(), it->second.end());
      }
    }
    for (const auto& target : targets) {
      auto host = ctx.host_of.find(target);
      if (host == ctx.host_of.end()) continue;
      deliveries.push_back({host->second, target, *task});
    }
  }
  return deliveries;
}

// ---------------- SensorMachine ----------------

SensorMachine::SensorMachine(RunContext* context, sim::NodeId id)
    : ctx_(context), id_(std::move(id)),
      runtime_(context->world, id_, context->run_seed, &context->vs_counter),
      dialect_(agent::Dialect::KeyValueText) {
  auto host = ctx_->host_of.find(id_);
  if (host != ctx_->host_of.end()) {
    auto dialect = ctx_->dialect_of.find(host->second);
    if (dialect != ctx_->dialect_of.end()) dialect_ = dialect->second;
  }
}

void SensorMachine::schedule_next_tick() {
  auto next = runtime_.next_activation();
  if (!next || scheduled_ticks_.count(*next)) return;
  sim::Packet timer;
  timer.tag = "timer:tick";
  ctx_->simulator->schedule(*next, id_, std::move(timer));
  scheduled_ticks_.insert(*next);
}

void SensorMachine::do_tick(sim::SimTime at) {
  for (const auto& emission : runtime_.tick(at)) {
    ctx_->simulator->log_local(id_, std::nullopt, "emit", emit_correlation(emission));
    agent::DialectReport report{emission.task_id, {emission.record}};

    wire::Message msg;
    msg.type = wire::MsgType::Confirmable;
    msg.code = wire::Code::Post;
    msg.message_id = mid_++;
    msg.uri_path = {"gi", "data"};
    msg.payload = agent::dialect_encode(dialect_, report);

    sim::Packet packet;
    packet.msg = std::move(msg);
    packet.tag = "gi-data";
    packet.correlation = agent::data_correlation(emission.task_id, {emission.record});
    ctx_->world->delegate_to_gto(*ctx_->simulator, id_, std::move(packet));
  }
  schedule_next_tick();
}

void SensorMachine::handle(const sim::Delivery& delivery) {
  const sim::Packet& packet = delivery.packet;
  if (packet.tag == "timer:tick") {
    scheduled_ticks_.erase(delivery.at);
    do_tick(delivery.at);
    return;
  }
  if (packet.channel != ChannelKind::Gi) return;
  if (packet.msg.type == wire::MsgType::Acknowledgement) return;  // data acks

  if (packet.tag == "gi-ctrl") {
    wire::Code code = wire::Code::Changed;
    std::string correlation;
    try {
      auto document = agent::dialect_unwrap_control(dialect_, packet.msg.payload);
      agent::ControlCommand command = agent::decode_control(document);
      correlation = std::string(agent::to_string(command.verb)) + ":" + command.target;
      code = agent::Agent::apply_pci(command, runtime_, delivery.at);
      ctx_->simulator->log_local(id_, ChannelKind::PCi, "pci-apply", correlation);
      schedule_next_tick();
    } catch (const Error& error) {
      VSN_DEBUG(id_ << " rejected control: " << error.what());
      code = agent::response_code_for(error);
    }
    ctx_->simulator->send(id_, delivery.from,
                          ack_packet(packet.msg, code, ChannelKind::Gi, "gi-ctrl-ack",
                                     correlation));
  }
}

// ---------------- HostMachine ----------------

HostMachine::HostMachine(RunContext* context, sim::NodeId id)
    : ctx_(context), id_(std::move(id)),
      agent_(agent::AgentBinding{"agent-" + id_, id_,
                                 context->managed.count(id_) ? context->managed.at(id_)
                                                             : std::vector<sim::NodeId>{},
                                 context->dialect_of.count(id_)
                                     ? context->dialect_of.at(id_)
                                     : agent::Dialect::KeyValueText},
             context->world),
      edge_(id_, [this] { return agent_.next_mid(); }) {
  agent_.on_di_exchange = [this](const sim::NodeId& peer, sim::SimTime sent,
                                 sim::SimTime received) {
    Exchange exchange{sent, received};
    ctx_->metrics->add(measure_hpd(exchange, ctx_->iteration, id_ + "->" + peer));
  };

  for (const auto& node : ctx_->config->nodes)
    if (node.id == id_) {
      edge_.accept_advertisements = !node.decline_overlays;
      if (is_sensing(node))
        runtime_ = std::make_unique<vrt::NodeRuntime>(ctx_->world, id_, ctx_->run_seed,
                                                      &ctx_->vs_counter);
    }

  if (ctx_->config->monitor) {
    window_ = static_cast<sim::Duration>(ctx_->config->monitor->window_ms * 1000.0);
    compute_cost_ = static_cast<sim::Duration>(ctx_->config->monitor->compute_cost_ms * 1000.0);
  }

  edge_.on_group_message = [this](const overlay::OverlayMessage& message,
                                  const sim::Delivery& delivery) {
    if (message.body.value("type", std::string()) != "fire-notification") return;
    sim::NodeId reporter = message.body.value("reporter", std::string());
    if (agent_.manages(reporter)) return;  // our sensor raised it, no reply
    std::uint64_t round = message.body.value("round", std::uint64_t{0});
    pending_rounds_[round] = PendingRound{false, message.overlay_id, delivery.from,
                                          delivery.at};
    sim::Packet timer;
    timer.tag = "timer:fire-reply";
    timer.correlation = std::to_string(round);
    timer.overlay = message.overlay_id;
    ctx_->simulator->schedule(delivery.at + compute_cost_, id_, std::move(timer));
  };
}

std::vector<fca::RateObservation> HostMachine::observations_at(sim::SimTime window_end) const {
  std::vector<fca::RateObservation> out;
  double window_s = sim::to_seconds(window_);
  for (const auto& sensor : agent_.binding().managed) {
    fca::RateObservation obs;
    obs.node = sensor;
    obs.window_s = window_s;
    auto it = notifications_.find(sensor);
    if (it != notifications_.end()) {
      sim::SimTime start = window_end > window_ ? window_end - window_ : 0;
      for (sim::SimTime t : it->second)
        if (t > start && t <= window_end) ++obs.count;
    }
    out.push_back(std::move(obs));
  }
  return out;
}

void HostMachine::send_fire_reply(const std::string& overlay_id, std::uint64_t round,
                                  sim::SimTime window_end) {
  json observations = json::array();
  for (const auto& obs : observations_at(window_end))
    observations.push_back(
        {{"node", obs.node}, {"window_s", obs.window_s}, {"count", obs.count}});
  edge_.direct_reply(*ctx_->simulator, overlay_id,
                     {{"type", "fire-reply"}, {"round", round}, {"observations", observations}});
}

void HostMachine::schedule_next_tick() {
  if (!runtime_) return;
  auto next = runtime_->next_activation();
  if (!next || scheduled_ticks_.count(*next)) return;
  sim::Packet timer;
  timer.tag = "timer:tick";
  ctx_->simulator->schedule(*next, id_, std::move(timer));
  scheduled_ticks_.insert(*next);
}

void HostMachine::do_tick(sim::SimTime at) {
  for (const auto& emission : runtime_->tick(at)) {
    ctx_->simulator->log_local(id_, std::nullopt, "emit", emit_correlation(emission));
    if (emission.notification) notifications_[id_].push_back(at);
    try {
      agent_.ingest_pdi(*ctx_->simulator, id_, emission.task_id, {emission.record},
                        ctx_->apps);
    } catch (const Error& error) {
      VSN_WARN(id_ << " could not forward data: " << error.what());
    }
  }
  schedule_next_tick();
}

void HostMachine::handle_gi(const sim::Delivery& delivery) {
  const wire::Message& msg = delivery.packet.msg;
  if (msg.type == wire::MsgType::Acknowledgement) {
    if (auto deferred = agent_.complete_gi_ack(msg)) {
      sim::Packet response;
      response.channel = ChannelKind::Ci;
      response.msg = deferred->response;
      response.reply = true;
      response.tag = "ci-resp";
      ctx_->simulator->send(id_, deferred->requester, std::move(response));
    }
    return;
  }

  if (delivery.packet.tag == "gi-data") {
    wire::Code code = wire::Code::Changed;
    try {
      agent::DialectReport report =
          agent::dialect_decode(agent_.binding().dialect, msg.payload);
      const vrt::AppTask* task = agent_.task_for(delivery.from, report.task_id);
      if (task && task->notification)
        for (const auto& record : report.records)
          notifications_[delivery.from].push_back(micros_of_seconds(record.time));
      agent_.ingest_pdi_frame(*ctx_->simulator, delivery.from, msg.payload, ctx_->apps);
    } catch (const Error& error) {
      VSN_WARN(id_ << " dropped Gi data from " << delivery.from << ": " << error.what());
      code = agent::response_code_for(error);
    }
    ctx_->simulator->send(id_, delivery.from,
                          ack_packet(msg, code, ChannelKind::Gi, "gi-data-ack",
                                     delivery.packet.correlation));
  }
}

void HostMachine::handle_ci_request(const sim::Delivery& delivery) {
  const wire::Message& msg = delivery.packet.msg;
  agent::ControlCommand command;
  try {
    command = agent::decode_control(msg.payload);
  } catch (const Error& error) {
    ctx_->simulator->send(id_, delivery.from,
                          ack_packet(msg, wire::Code::BadRequest, ChannelKind::Ci,
                                     "ci-resp", "malformed"));
    return;
  }

  std::string correlation =
      std::string(agent::to_string(command.verb)) + ":" + command.target;

  if (command.verb == agent::Verb::JoinOverlay) {
    wire::Code code = wire::Code::Changed;
    try {
      edge_.join(*ctx_->simulator, command.args["overlay_id"].get<std::string>());
    } catch (const Error& error) {
      code = agent::response_code_for(error);
    }
    ctx_->simulator->send(id_, delivery.from,
                          ack_packet(msg, code, ChannelKind::Ci, "ci-resp", correlation));
    return;
  }

  vrt::NodeRuntime* local = command.target == id_ ? runtime_.get() : nullptr;
  auto result = agent_.handle_ci(*ctx_->simulator, command, msg, delivery.from, local,
                                 [this] { schedule_next_tick(); });
  if (result.response) {
    sim::Packet response;
    response.channel = ChannelKind::Ci;
    response.msg = *result.response;
    response.reply = true;
    response.tag = "ci-resp";
    response.correlation = correlation;
    ctx_->simulator->send(id_, delivery.from, std::move(response));
  }
}

void HostMachine::handle(const sim::Delivery& delivery) {
  const sim::Packet& packet = delivery.packet;

  if (packet.tag == "timer:tick") {
    scheduled_ticks_.erase(delivery.at);
    do_tick(delivery.at);
    return;
  }
  if (packet.tag == "timer:fire-reply") {
    std::uint64_t round = std::stoull(packet.correlation);
    auto it = pending_rounds_.find(round);
    if (it == pending_rounds_.end()) return;
    PendingRound pending = it->second;
    pending_rounds_.erase(it);
    if (pending.baseline) {
      json observations = json::array();
      for (const auto& obs : observations_at(pending.window_end))
        observations.push_back(
            {{"node", obs.node}, {"window_s", obs.window_s}, {"count", obs.count}});
      wire::Message reply;
      reply.type = wire::MsgType::Confirmable;
      reply.code = wire::Code::Post;
      reply.message_id = agent_.next_mid();
      reply.uri_path = {"apps", pending.context, "replies"};
      reply.content_format = wire::kContentFormatJson;
      std::string body = json{{"type", "fire-reply"},
                              {"round", round},
                              {"sender", id_},
                              {"observations", observations}}
                             .dump();
      reply.payload.assign(body.begin(), body.end());

      sim::Packet out;
      out.channel = ChannelKind::Ci;
      out.msg = std::move(reply);
      out.tag = "baseline-reply";
      out.correlation = std::to_string(round);
      ctx_->simulator->send(id_, pending.reply_node, std::move(out));
    } else {
      send_fire_reply(pending.context, round, pending.window_end);
    }
    return;
  }

  if (!packet.channel) return;

  switch (*packet.channel) {
    case ChannelKind::Gi:
      handle_gi(delivery);
      return;
    case ChannelKind::Di:
      if (packet.msg.type == wire::MsgType::Acknowledgement)
        agent_.record_di_ack(packet.msg, delivery.at);
      return;
    case ChannelKind::Ci: {
      if (edge_.on_delivery(*ctx_->simulator, delivery)) return;
      const auto& uri = packet.msg.uri_path;
      if (packet.msg.type == wire::MsgType::Acknowledgement) return;  // reply acks
      if (uri.size() == 5 && uri[0] == "agents" && uri[4] == "ci") {
        handle_ci_request(delivery);
        return;
      }
      if (uri.size() == 3 && uri[0] == "agents" && uri[2] == "rounds") {
        json body = json::parse(packet.msg.payload.begin(), packet.msg.payload.end(),
                                nullptr, false);
        if (body.is_discarded() || !body.is_object()) {
          ctx_->simulator->send(id_, delivery.from,
                                ack_packet(packet.msg, wire::Code::BadRequest,
                                           ChannelKind::Ci, "round-ack"));
          return;
        }
        ctx_->simulator->send(id_, delivery.from,
                              ack_packet(packet.msg, wire::Code::Changed, ChannelKind::Ci,
                                         "round-ack"));
        std::uint64_t round = body.value("round", std::uint64_t{0});
        sim::NodeId reporter = body.value("reporter", std::string());
        if (agent_.manages(reporter)) return;
        pending_rounds_[round] = PendingRound{true, body.value("app_id", std::string()),
                                              delivery.from, delivery.at};
        sim::Packet timer;
        timer.tag = "timer:fire-reply";
        timer.correlation = std::to_string(round);
        ctx_->simulator->schedule(delivery.at + compute_cost_, id_, std::move(timer));
        return;
      }
      return;
    }
    default:
      return;
  }
}

// ---------------- AppMachine ----------------

AppMachine::AppMachine(RunContext* context, const AppConfig& app)
    : ctx_(context), app_(app) {
  if (app_.fire_monitor && ctx_->config->monitor) {
    const MonitorConfig& m = *ctx_->config->monitor;
    fca::MonitorConfig monitor;
    monitor.params = {m.lambda_max, m.radius_m};
    monitor.window = static_cast<sim::Duration>(m.window_ms * 1000.0);
    monitor.round_interval = static_cast<sim::Duration>(m.round_interval_ms * 1000.0);
    monitor.compute_cost = static_cast<sim::Duration>(m.compute_cost_ms * 1000.0);
    monitor.sectors = m.sectors;
    if (m.debounce_ms) {
      monitor.debounce = static_cast<sim::Duration>(*m.debounce_ms * 1000.0);
    } else {
      for (const auto& task : ctx_->config->tasks)
        if (task.task.task_id == m.trigger_task) monitor.debounce = task.task.period;
    }
    monitor_ = std::make_unique<fca::FireMonitor>(monitor);
  }
}

overlay::Rendezvous* AppMachine::rendezvous(const std::string& overlay_id) {
  auto it = rendezvous_.find(overlay_id);
  return it == rendezvous_.end() ? nullptr : it->second.get();
}

std::vector<std::pair<std::string, std::vector<sim::NodeId>>> AppMachine::overlay_members()
    const {
  std::vector<std::pair<std::string, std::vector<sim::NodeId>>> out;
  for (const auto& [id, rdv] : rendezvous_) out.emplace_back(id, rdv->group().members);
  return out;
}

void AppMachine::start() {
  for (const auto& overlay : ctx_->config->overlays) {
    if (overlay.app_id != app_.id) continue;
    overlay_configs_[overlay.overlay_id] = &overlay;
    if (fire_overlay_id_.empty()) fire_overlay_id_ = overlay.overlay_id;

    sim::Packet timer;
    timer.overlay = overlay.overlay_id;
    if (ctx_->config->baseline_mode) {
      if (!app_.fire_monitor) continue;  // baseline runs city tasks only
      timer.tag = "timer:baseline-deploy";
    } else {
      timer.tag = "timer:create-overlay";
      auto rdv = std::make_unique<overlay::Rendezvous>(
          app_.node, overlay.overlay_id, overlay.service_name, [this] { return next_mid(); });
      rdv->on_ready = [this, id = overlay.overlay_id](sim::SimTime at) {
        OverlayCreation creation{rendezvous_[id]->create_started_at(), at};
        ctx_->metrics->add(measure_ocd(creation, ctx_->iteration, id));
      };
      rdv->on_direct_reply = [this](const sim::NodeId& from, const json& body,
                                    sim::SimTime at) {
        if (body.value("type", std::string()) != "fire-reply") return;
        handle_round_reply(from, body, at);
      };
      rendezvous_[overlay.overlay_id] = std::move(rdv);
    }
    ctx_->simulator->schedule(
        static_cast<sim::SimTime>(overlay.start_ms * 1000.0), app_.node, std::move(timer));
  }

  for (std::size_t i = 0; i < ctx_->config->control_script.size(); ++i) {
    const auto& entry = ctx_->config->control_script[i];
    if (entry.via_app != app_.id) continue;
    sim::Packet timer;
    timer.tag = "timer:script";
    timer.correlation = std::to_string(i);
    ctx_->simulator->schedule(static_cast<sim::SimTime>(entry.at_ms * 1000.0), app_.node,
                              std::move(timer));
  }
}

void AppMachine::start_overlay(const OverlayConfig& overlay) {
  auto deliveries = resolve_deliveries(*ctx_, overlay);
  rendezvous_[overlay.overlay_id]->start_create(
      *ctx_->simulator, *ctx_->registry, overlay.candidates, deliveries,
      static_cast<sim::Duration>(overlay.setup_cost_ms * 1000.0),
      static_cast<sim::Duration>(overlay.processing_ms * 1000.0));
}

void AppMachine::deploy_baseline(const OverlayConfig& overlay) {
  if (!ctx_->config->monitor) return;
  const std::string& trigger = ctx_->config->monitor->trigger_task;
  ctx_->simulator->log_local(app_.node, std::nullopt, "baseline-deploy-start");
  for (const auto& delivery : resolve_deliveries(*ctx_, overlay)) {
    if (delivery.task.task_id != trigger) continue;  // no node-level virtualization
    agent::ControlCommand command;
    command.verb = agent::Verb::DeployTask;
    command.target = delivery.target;
    command.args = {{"task", agent::task_to_json(delivery.task)}};

    wire::Message request;
    request.type = wire::MsgType::Confirmable;
    request.code = wire::Code::Post;
    request.message_id = next_mid();
    request.uri_path = {"agents", "agent-" + delivery.member, "nodes", delivery.target, "ci"};
    request.content_format = wire::kContentFormatJson;
    request.payload = agent::encode_control(command);

    sim::Packet packet;
    packet.channel = ChannelKind::Ci;
    packet.msg = std::move(request);
    packet.tag = "task-delivery";
    packet.correlation = delivery.task.task_id + ":" + delivery.target;
    pending_baseline_mids_.insert(packet.msg.message_id);
    ctx_->simulator->send(app_.node, delivery.member, std::move(packet));
  }
  pending_baseline_deploys_ = pending_baseline_mids_.size();
  if (pending_baseline_deploys_ == 0) baseline_ready_ = true;
}

void AppMachine::run_script_entry(const ControlScriptEntry& entry) {
  auto host = ctx_->host_of.find(entry.target);
  sim::NodeId member = host != ctx_->host_of.end() ? host->second : entry.target;

  agent::ControlCommand command{entry.verb, entry.target, entry.args};
  wire::Message request;
  request.type = wire::MsgType::Confirmable;
  request.code = wire::Code::Post;
  request.message_id = next_mid();
  request.uri_path = {"agents", "agent-" + member, "nodes", entry.target, "ci"};
  request.content_format = wire::kContentFormatJson;
  request.payload = agent::encode_control(command);

  sim::Packet packet;
  packet.channel = ChannelKind::Ci;
  packet.msg = std::move(request);
  packet.tag = "script-cmd";
  packet.correlation = std::string(agent::to_string(entry.verb)) + ":" + entry.target;
  ctx_->simulator->send(app_.node, member, std::move(packet));
}

bool AppMachine::on_fire_event(const fca::FireEvent& event) {
  if (!monitor_) return false;
  bool ready = false;
  if (ctx_->config->baseline_mode) {
    ready = baseline_ready_;
  } else {
    auto* rdv = rendezvous(fire_overlay_id_);
    ready = rdv && (rdv->group().state == overlay::GroupState::Ready ||
                    rdv->group().state == overlay::GroupState::Active);
  }
  if (!monitor_->should_trigger_round(event, ready)) return false;
  begin_round(event.reporter);
  return true;
}

void AppMachine::begin_round(const sim::NodeId& reporter) {
  sim::NodeId reporter_host;
  if (auto it = ctx_->host_of.find(reporter); it != ctx_->host_of.end())
    reporter_host = it->second;
  sim::SimTime now = ctx_->simulator->now();
  double window_s = sim::to_seconds(monitor_->config().window);

  if (ctx_->config->baseline_mode) {
    std::set<sim::NodeId> expected;
    for (const auto& sensor : ctx_->fire_sensors) {
      auto host = ctx_->host_of.find(sensor);
      if (host != ctx_->host_of.end() && host->second != reporter_host)
        expected.insert(host->second);
    }
    std::uint64_t round = monitor_->begin_round(reporter, now, expected);
    ctx_->simulator->log_local(app_.node, std::nullopt, "round-start",
                               std::to_string(round) + ":" + reporter);
    json body = {{"round", round},
                 {"reporter", reporter},
                 {"window_s", window_s},
                 {"app_id", app_.id}};
    std::string text = body.dump();
    for (const auto& host : expected) {
      wire::Message request;
      request.type = wire::MsgType::Confirmable;
      request.code = wire::Code::Post;
      request.message_id = next_mid();
      request.uri_path = {"agents", "agent-" + host, "rounds"};
      request.content_format = wire::kContentFormatJson;
      request.payload.assign(text.begin(), text.end());

      sim::Packet packet;
      packet.channel = ChannelKind::Ci;
      packet.msg = std::move(request);
      packet.tag = "baseline-round";
      packet.correlation = std::to_string(round);
      ctx_->simulator->send(app_.node, host, std::move(packet));
    }
    if (expected.empty()) VSN_WARN("baseline round with no expected repliers");
    return;
  }

  auto* rdv = rendezvous(fire_overlay_id_);
  std::set<sim::NodeId> expected;
  for (const auto& member : rdv->group().members)
    if (member != reporter_host) expected.insert(member);
  std::uint64_t round = monitor_->begin_round(reporter, now, expected);
  ctx_->simulator->log_local(app_.node, std::nullopt, "round-start",
                             std::to_string(round) + ":" + reporter, fire_overlay_id_);
  rdv->multicast(*ctx_->simulator, app_.node,
                 {{"type", "fire-notification"},
                  {"round", round},
                  {"reporter", reporter},
                  {"window_s", window_s}});
}

void AppMachine::handle_round_reply(const sim::NodeId& from, const json& body,
                                    sim::SimTime at) {
  std::uint64_t round = body.value("round", std::uint64_t{0});
  std::vector<fca::RateObservation> observations;
  if (body.contains("observations"))
    for (const auto& item : body["observations"]) {
      fca::RateObservation obs;
      obs.node = item.value("node", std::string());
      obs.window_s = item.value("window_s", 1.0);
      obs.count = item.value("count", std::uint64_t{0});
      observations.push_back(std::move(obs));
    }
  const fca::FireMonitor::Round* complete =
      monitor_->record_reply(round, from, observations, at);
  if (complete) complete_round(*complete);
}

void AppMachine::complete_round(const fca::FireMonitor::Round& round) {
  NotificationRound nr;
  nr.multicast_sent = round.multicast_sent;
  nr.expected = round.expected.size();
  for (const auto& [member, at] : round.replies) nr.replies.push_back(at);
  std::string context = ctx_->config->baseline_mode ? "baseline" : fire_overlay_id_;
  ctx_->metrics->add(measure_fnd(nr, ctx_->iteration, context));
  ctx_->simulator->log_local(app_.node, std::nullopt, "round-complete",
                             std::to_string(round.id),
                             ctx_->config->baseline_mode ? "" : fire_overlay_id_);
  try {
    auto observations = monitor_->observations(ctx_->simulator->now(), ctx_->fire_sensors);
    std::map<sim::NodeId, phys::Position> positions;
    for (const auto& sensor : ctx_->fire_sensors)
      positions[sensor] = ctx_->world->node(sensor).position;
    contour_ = fca::compute_contour(observations, positions, monitor_->config().params,
                                    monitor_->config().sectors);
  } catch (const Error& error) {
    VSN_INFO("contour not available yet: " << error.what());
  }
}

void AppMachine::handle_di_post(const sim::Delivery& delivery) {
  const wire::Message& msg = delivery.packet.msg;
  if (!msg.payload.empty() &&
      (!msg.content_format || *msg.content_format != wire::kContentFormatSenmlJson)) {
    ctx_->simulator->send(app_.node, delivery.from,
                          ack_packet(msg, wire::Code::BadRequest, ChannelKind::Di,
                                     "di-nack", delivery.packet.correlation));
    return;
  }
  wire::MeasurementBatch batch;
  try {
    batch = wire::decode_senml(msg.payload);
  } catch (const Error& error) {
    ctx_->simulator->send(app_.node, delivery.from,
                          ack_packet(msg, wire::Code::BadRequest, ChannelKind::Di,
                                     "di-nack", delivery.packet.correlation));
    return;
  }
  ++batches_received_;
  ctx_->simulator->send(app_.node, delivery.from,
                        ack_packet(msg, wire::Code::Created, ChannelKind::Di, "di-resp",
                                   delivery.packet.correlation));

  bool fire_event = msg.uri_path.size() == 4 && msg.uri_path[2] == "events";
  if (fire_event && monitor_) {
    for (const auto& record : batch.records) {
      monitor_->note_notification(record.base_name, micros_of_seconds(record.time));
      fca::FireEvent event{record.base_name, record, delivery.at};
      try {
        on_fire_event(event);
      } catch (const Error& error) {
        VSN_WARN(app_.id << ": fire event before overlay ready, round skipped");
      }
    }
  }
}

void AppMachine::handle_reply_post(const sim::Delivery& delivery) {
  const wire::Message& msg = delivery.packet.msg;
  ctx_->simulator->send(app_.node, delivery.from,
                        ack_packet(msg, wire::Code::Changed, ChannelKind::Ci, "reply-ack"));
  json body = json::parse(msg.payload.begin(), msg.payload.end(), nullptr, false);
  if (body.is_discarded() || !monitor_) return;
  handle_round_reply(body.value("sender", delivery.from), body, delivery.at);
}

void AppMachine::handle(const sim::Delivery& delivery) {
  const sim::Packet& packet = delivery.packet;

  if (packet.tag == "timer:create-overlay") {
    start_overlay(*overlay_configs_.at(packet.overlay));
    return;
  }
  if (packet.tag == "timer:baseline-deploy") {
    deploy_baseline(*overlay_configs_.at(packet.overlay));
    return;
  }
  if (packet.tag == "timer:script") {
    run_script_entry(ctx_->config->control_script.at(std::stoul(packet.correlation)));
    return;
  }

  if (!packet.channel) return;

  if (*packet.channel == ChannelKind::Di) {
    if (packet.msg.type != wire::MsgType::Acknowledgement) handle_di_post(delivery);
    return;
  }
  if (*packet.channel != ChannelKind::Ci) return;

  for (auto& [id, rdv] : rendezvous_)
    if (rdv->on_delivery(*ctx_->simulator, delivery)) return;

  const auto& uri = packet.msg.uri_path;
  if (packet.msg.type == wire::MsgType::Acknowledgement) {
    if (pending_baseline_mids_.erase(packet.msg.message_id)) {
      if (wire::code_class(packet.msg.code) != 2)
        VSN_WARN("baseline deploy rejected: " << wire::code_string(packet.msg.code));
      if (--pending_baseline_deploys_ == 0) {
        baseline_ready_ = true;
        ctx_->simulator->log_local(app_.node, std::nullopt, "baseline-ready");
      }
    }
    return;
  }
  if (uri.size() == 3 && uri[0] == "apps" && uri[2] == "replies") {
    handle_reply_post(delivery);
    return;
  }
}

void AppMachine::finalize() {
  if (!monitor_) return;
  try {
    auto observations =
        monitor_->observations(ctx_->simulator->now(), ctx_->fire_sensors);
    std::map<sim::NodeId, phys::Position> positions;
    for (const auto& sensor : ctx_->fire_sensors)
      positions[sensor] = ctx_->world->node(sensor).position;
    contour_ = fca::compute_contour(observations, positions, monitor_->config().params,
                                    monitor_->config().sectors);
    last_observations_ = observations;
  } catch (const Error& error) {
    VSN_INFO("no final contour: " << error.what());
  }
}

}  // namespace vsn::harness
