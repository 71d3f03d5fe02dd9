#include "vsn/errors.hpp"
#include "vsn/sensoragent.hpp"

#include "doctest.h"

using namespace vsn;
using namespace vsn::agent;

namespace {

struct AgentFixture {
  phys::World world;
  sim::Simulator simulator;
  Agent agent;
  AppDirectory apps;
  std::vector<sim::Delivery> at_app;

  explicit AgentFixture(Dialect dialect = Dialect::KeyValueText)
      : agent(AgentBinding{"agentX", "g1", {"s01", "g1"}, dialect}, &world) {
    world.environment().ambient_c = 20.0;
    world.add_node({"g1", phys::NodeKind::Gto, {0, 0}, std::nullopt, 8});
    world.add_node({"s01", phys::NodeKind::TypeA, {5, 5}, "g1", 3});
    world.add_node({"app-node", phys::NodeKind::Gto, {9, 9}, std::nullopt, 8});
    apps["city"] = "app-node";

    simulator.add_node("g1", [](const sim::Delivery&) {});
    simulator.add_node("s01", [](const sim::Delivery&) {});
    simulator.add_node("app-node",
                       [this](const sim::Delivery& d) { at_app.push_back(d); });
    sim::LinkModel link;
    link.propagation = sim::ms(4);
    simulator.set_default_link(link);
  }

  vrt::AppTask fire_task() {
    vrt::AppTask task;
    task.task_id = "city-fire";
    task.app_id = "city";
    task.period = sim::ms(500);
    task.priority = 0;
    task.condition = vrt::ReportCondition::threshold_above(45.0);
    task.notification = vrt::NotificationPolicy{1.0, 20.0, 80.0};
    return task;
  }
};

}  // namespace

TEST_CASE("uri_for follows the agents/nodes scheme and is deterministic") {
  AgentBinding binding{"agentX", "g1", {"n3"}, Dialect::KeyValueText};
  std::vector<std::string> expected = {"agents", "agentX", "nodes", "n3", "di"};
  CHECK(uri_for(binding, ChannelKind::Di, "n3") == expected);
  CHECK(uri_for(binding, ChannelKind::Di, "n3") == uri_for(binding, ChannelKind::Di, "n3"));
  CHECK(uri_for(binding, ChannelKind::Ci, "n3").back() == "ci");
  for (ChannelKind channel : {ChannelKind::PDi, ChannelKind::PCi, ChannelKind::Gi}) {
    try {
      uri_for(binding, channel, "n3");
      FAIL("expected ProprietaryChannel");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ProprietaryChannel);
    }
  }
}

TEST_CASE("a managed fire reading becomes a SenML POST at the application") {
  AgentFixture fx;
  fx.agent.record_task("s01", fx.fire_task());

  wire::SenMLRecord reading{"s01", "temperature", "Cel", 63.0, 12.5};
  fx.agent.ingest_pdi(fx.simulator, "s01", "city-fire", {reading}, fx.apps);
  fx.simulator.run_until(sim::ms(100));

  REQUIRE(fx.at_app.size() == 1);
  const auto& delivery = fx.at_app[0];
  CHECK(delivery.packet.channel == ChannelKind::Di);
  CHECK(delivery.packet.msg.content_format == wire::kContentFormatSenmlJson);
  CHECK(delivery.packet.msg.uri_path ==
        std::vector<std::string>{"apps", "city", "events", "fire"});
  auto batch = wire::decode_senml(delivery.packet.msg.payload);
  REQUIRE(batch.records.size() == 1);
  CHECK(batch.records[0] == reading);

  // The PDi hand-off is visible in the trace ahead of the Di send.
  bool pdi_before_di = false;
  std::uint64_t pdi_seq = 0;
  for (const auto& entry : fx.simulator.trace().entries()) {
    if (entry.channel == ChannelKind::PDi && entry.tag == "pdi-ingest") pdi_seq = entry.seq;
    if (entry.channel == ChannelKind::Di && entry.type == sim::TraceType::Send)
      pdi_before_di = pdi_seq != 0 && pdi_seq < entry.seq;
  }
  CHECK(pdi_before_di);
}

TEST_CASE("plain periodic readings go to the data endpoint") {
  AgentFixture fx;
  vrt::AppTask ambient;
  ambient.task_id = "city-ambient";
  ambient.app_id = "city";
  ambient.period = sim::ms(2000);
  ambient.priority = 1;
  fx.agent.record_task("g1", ambient);

  fx.agent.ingest_pdi(fx.simulator, "g1", "city-ambient",
                      {{"g1", "temperature", "Cel", 20.0, 2.0}}, fx.apps);
  fx.simulator.run_until(sim::ms(100));
  REQUIRE(fx.at_app.size() == 1);
  CHECK(fx.at_app[0].packet.msg.uri_path ==
        std::vector<std::string>{"apps", "city", "data"});
}

TEST_CASE("records from unmanaged nodes are refused") {
  AgentFixture fx;
  try {
    fx.agent.ingest_pdi(fx.simulator, "intruder", "city-fire",
                        {{"intruder", "temperature", "Cel", 99.0, 1.0}}, fx.apps);
    FAIL("expected UnmanagedNode");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnmanagedNode);
  }
}

TEST_CASE("reports for tasks the agent never deployed are refused") {
  AgentFixture fx;
  try {
    fx.agent.ingest_pdi(fx.simulator, "s01", "ghost-task",
                        {{"s01", "temperature", "Cel", 99.0, 1.0}}, fx.apps);
    FAIL("expected UnknownTask");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownTask);
  }
}

TEST_CASE("gi frames translate through the dialect before the Di hop") {
  for (Dialect dialect : {Dialect::KeyValueText, Dialect::CompactBinary}) {
    AgentFixture fx(dialect);
    fx.agent.record_task("s01", fx.fire_task());
    DialectReport report{"city-fire", {{"s01", "temperature", "Cel", 71.5, 30.25}}};
    fx.agent.ingest_pdi_frame(fx.simulator, "s01", dialect_encode(dialect, report),
                              fx.apps);
    fx.simulator.run_until(sim::ms(100));
    REQUIRE(fx.at_app.size() == 1);
    CHECK(wire::decode_senml(fx.at_app[0].packet.msg.payload).records[0] ==
          report.records[0]);
  }
}

TEST_CASE("di acknowledgements complete the pending exchange") {
  AgentFixture fx;
  fx.agent.record_task("s01", fx.fire_task());
  std::vector<std::pair<sim::SimTime, sim::SimTime>> exchanges;
  fx.agent.on_di_exchange = [&](const sim::NodeId& peer, sim::SimTime sent,
                                sim::SimTime received) {
    CHECK(peer == "app-node");
    exchanges.emplace_back(sent, received);
  };
  fx.agent.ingest_pdi(fx.simulator, "s01", "city-fire",
                      {{"s01", "temperature", "Cel", 50.0, 0.5}}, fx.apps);
  fx.simulator.run_until(sim::ms(50));
  REQUIRE(fx.at_app.size() == 1);

  wire::Message ack;
  ack.type = wire::MsgType::Acknowledgement;
  ack.code = wire::Code::Created;
  ack.message_id = fx.at_app[0].packet.msg.message_id;
  CHECK(fx.agent.record_di_ack(ack, sim::ms(42)));
  CHECK_FALSE(fx.agent.record_di_ack(ack, sim::ms(43)));  // consumed
  REQUIRE(exchanges.size() == 1);
  CHECK(exchanges[0].second == sim::ms(42));
}

namespace {

wire::Message ci_request(const ControlCommand& command, std::uint16_t mid) {
  wire::Message request;
  request.code = wire::Code::Post;
  request.message_id = mid;
  request.uri_path = {"agents", "agentX", "nodes", command.target, "ci"};
  request.content_format = wire::kContentFormatJson;
  request.payload = encode_control(command);
  return request;
}

}  // namespace

TEST_CASE("handle_ci applies local commands and answers 2.04") {
  AgentFixture fx;
  std::uint64_t counter = 0;
  vrt::NodeRuntime runtime(&fx.world, "g1", 1, &counter);
  vrt::AppTask a, b;
  a.task_id = "a";
  a.app_id = "city";
  a.priority = 0;
  b.task_id = "b";
  b.app_id = "city";
  b.priority = 5;
  runtime.deploy_task(a, 0);
  runtime.deploy_task(b, 0);
  CHECK(runtime.tick(sim::ms(1000))[0].task_id == "a");

  ControlCommand command{Verb::SetPriority, "g1", {{"task_id", "a"}, {"priority", 9}}};
  auto result = fx.agent.handle_ci(fx.simulator, command, ci_request(command, 7),
                                   "app-node", &runtime, nullptr);
  REQUIRE(result.response.has_value());
  CHECK(result.response->code == wire::Code::Changed);
  CHECK(result.response->message_id == 7);
  CHECK(runtime.tick(sim::ms(2000))[0].task_id == "b");
}

TEST_CASE("handle_ci surfaces capacity errors as 4.00-class responses") {
  AgentFixture fx;
  std::uint64_t counter = 0;
  vrt::NodeRuntime runtime(&fx.world, "g1", 1, &counter);
  nlohmann::json task_json = {{"task_id", "t"}, {"app_id", "city"},
                              {"quantity", "temperature"}, {"period_ms", 100.0},
                              {"priority", 0}};
  for (int i = 0; i < 8; ++i) {
    task_json["task_id"] = "t" + std::to_string(i);
    ControlCommand deploy{Verb::DeployTask, "g1", {{"task", task_json}}};
    fx.agent.handle_ci(fx.simulator, deploy, ci_request(deploy, i), "app-node", &runtime,
                       nullptr);
  }
  task_json["task_id"] = "overflow";
  ControlCommand deploy{Verb::DeployTask, "g1", {{"task", task_json}}};
  auto result = fx.agent.handle_ci(fx.simulator, deploy, ci_request(deploy, 99), "app-node",
                                   &runtime, nullptr);
  REQUIRE(result.response.has_value());
  CHECK(result.response->code == wire::Code::BadRequest);
}

TEST_CASE("commands for nodes managed elsewhere answer 4.04") {
  AgentFixture fx;
  ControlCommand command{Verb::SetPriority, "someone-elses-node",
                         {{"task_id", "a"}, {"priority", 1}}};
  auto result = fx.agent.handle_ci(fx.simulator, command, ci_request(command, 8),
                                   "app-node", nullptr, nullptr);
  REQUIRE(result.response.has_value());
  CHECK(result.response->code == wire::Code::NotFound);
}

TEST_CASE("TypeA targets go through a Gi round trip before the Ci response") {
  AgentFixture fx;
  fx.agent.record_task("s01", fx.fire_task());
  std::vector<sim::Delivery> at_sensor;
  fx.simulator.set_handler("s01",
                           [&](const sim::Delivery& d) { at_sensor.push_back(d); });

  ControlCommand command{Verb::SetPriority, "s01",
                         {{"task_id", "city-fire"}, {"priority", 4}}};
  auto result = fx.agent.handle_ci(fx.simulator, command, ci_request(command, 21),
                                   "app-node", nullptr, nullptr);
  CHECK_FALSE(result.response.has_value());
  CHECK(result.forwarded_gi);

  fx.simulator.run_until(sim::ms(50));
  REQUIRE(at_sensor.size() == 1);
  CHECK(at_sensor[0].packet.channel == ChannelKind::Gi);
  auto document = dialect_unwrap_control(Dialect::KeyValueText,
                                         at_sensor[0].packet.msg.payload);
  CHECK(decode_control(document).verb == Verb::SetPriority);

  wire::Message gi_ack;
  gi_ack.type = wire::MsgType::Acknowledgement;
  gi_ack.code = wire::Code::Changed;
  gi_ack.message_id = at_sensor[0].packet.msg.message_id;
  auto deferred = fx.agent.complete_gi_ack(gi_ack);
  REQUIRE(deferred.has_value());
  CHECK(deferred->requester == "app-node");
  CHECK(deferred->response.code == wire::Code::Changed);
  CHECK(deferred->response.message_id == 21);
}

TEST_CASE("task descriptors survive the JSON round trip") {
  AgentFixture fx;
  vrt::AppTask task = fx.fire_task();
  vrt::AppTask back = task_from_json(task_to_json(task));
  CHECK(back == task);
}
