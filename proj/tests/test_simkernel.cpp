#include <map>

#include "vsn/errors.hpp"
#include "vsn/simkernel.hpp"

#include "doctest.h"

using namespace vsn;
using namespace vsn::sim;

namespace {

Packet tagged(const std::string& tag) {
  Packet p;
  p.tag = tag;
  return p;
}

Packet wire_packet(ChannelKind channel, bool reply = false) {
  Packet p;
  p.channel = channel;
  p.msg.code = reply ? wire::Code::Created : wire::Code::Post;
  if (reply) p.msg.type = wire::MsgType::Acknowledgement;
  p.reply = reply;
  p.tag = reply ? "resp" : "req";
  return p;
}

}  // namespace

TEST_CASE("zero-delay event scheduled now dispatches on the next step") {
  Simulator sim;
  int hits = 0;
  sim.add_node("a", [&](const Delivery&) { ++hits; });
  sim.schedule(0, "a", tagged("t"));
  CHECK(sim.run_until(0) == 1);
  CHECK(hits == 1);
}

TEST_CASE("events at the same instant dispatch in insertion order") {
  Simulator sim;
  std::vector<std::string> order;
  sim.add_node("a", [&](const Delivery& d) { order.push_back(d.packet.tag); });
  sim.schedule(50, "a", tagged("first"));
  sim.schedule(50, "a", tagged("second"));
  sim.schedule(50, "a", tagged("third"));
  sim.run_until(100);
  CHECK(order == std::vector<std::string>{"first", "second", "third"});
}

TEST_CASE("scheduling into the past is refused") {
  Simulator sim;
  sim.add_node("a", [](const Delivery&) {});
  sim.schedule(10, "a", tagged("x"));
  sim.run_until(10);
  try {
    sim.schedule(5, "a", tagged("late"));
    FAIL("expected PastTime");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PastTime);
  }
}

TEST_CASE("first send pays session setup, later sends do not") {
  Simulator sim;
  sim.add_node("a", [](const Delivery&) {});
  sim.add_node("b", [](const Delivery&) {});
  LinkModel link;
  link.propagation = ms(4);
  link.session_setup = ms(10);
  sim.set_default_link(link);

  CHECK(sim.send("a", "b", wire_packet(ChannelKind::Di)) == ms(14));
  CHECK(sim.send("a", "b", wire_packet(ChannelKind::Di)) == ms(4));
  CHECK(sim.session_established("a", "b"));
  CHECK_FALSE(sim.session_established("b", "a"));

  // Replies ride the requester's connection: no setup, no establishment.
  CHECK(sim.send("b", "a", wire_packet(ChannelKind::Di, true)) == ms(4));
  CHECK_FALSE(sim.session_established("b", "a"));
  // A fresh initiated exchange the other way pays its own setup.
  CHECK(sim.send("b", "a", wire_packet(ChannelKind::Di)) == ms(14));
}

TEST_CASE("send to an unknown node fails") {
  Simulator sim;
  sim.add_node("a", [](const Delivery&) {});
  try {
    sim.send("a", "ghost", wire_packet(ChannelKind::Di));
    FAIL("expected UnknownNode");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownNode);
  }
}

TEST_CASE("downed links refuse traffic until restored") {
  Simulator sim;
  sim.add_node("a", [](const Delivery&) {});
  sim.add_node("b", [](const Delivery&) {});
  sim.set_link_down("a", "b", true);
  CHECK_THROWS_AS(sim.send("a", "b", wire_packet(ChannelKind::Di)), Error);
  sim.set_link_down("a", "b", false);
  CHECK_NOTHROW(sim.send("a", "b", wire_packet(ChannelKind::Di)));
}

TEST_CASE("run_until on an empty queue advances the clock") {
  Simulator sim;
  CHECK(sim.run_until(ms(500)) == 0);
  CHECK(sim.now() == ms(500));
}

TEST_CASE("run_until dispatches exactly the pending events before t") {
  Simulator sim;
  sim.add_node("a", [](const Delivery&) {});
  sim.schedule(ms(1), "a", tagged("1"));
  sim.schedule(ms(2), "a", tagged("2"));
  sim.schedule(ms(3), "a", tagged("3"));
  sim.schedule(ms(99), "a", tagged("later"));
  CHECK(sim.run_until(ms(10)) == 3);
}

namespace {

// A little two-node ping scenario with jitter, used for determinism checks.
std::vector<std::string> run_ping_scenario(std::uint64_t seed) {
  Simulator sim;
  LinkModel link;
  link.propagation = ms(4);
  link.processing = ms(1);
  link.session_setup = ms(10);
  link.jitter_max = ms(3);
  link.jitter_seed = seed;
  sim.set_default_link(link);

  sim.add_node("a", [&](const Delivery& d) {
    if (d.packet.tag == "req") return;
    if (d.at < ms(400)) sim.send("a", "b", wire_packet(ChannelKind::Di));
  });
  sim.add_node("b", [&](const Delivery& d) {
    if (d.packet.tag == "req") sim.send("b", "a", wire_packet(ChannelKind::Di, true));
  });
  sim.send("a", "b", wire_packet(ChannelKind::Di));
  sim.run_until(ms(1000));

  std::vector<std::string> lines;
  for (const auto& entry : sim.trace().entries()) lines.push_back(format_entry(entry));
  return lines;
}

}  // namespace

TEST_CASE("identical seed and scenario give an identical dispatch trace") {
  auto first = run_ping_scenario(77);
  auto second = run_ping_scenario(77);
  REQUIRE(first.size() > 10);
  CHECK(first == second);
}

TEST_CASE("different jitter seeds change delays") {
  auto first = run_ping_scenario(77);
  auto second = run_ping_scenario(78);
  CHECK(first != second);
}

TEST_CASE("causality: no delivery before send plus minimum link delay") {
  Simulator sim;
  LinkModel link;
  link.propagation = ms(4);
  link.processing = ms(1);
  link.session_setup = ms(10);
  link.jitter_max = ms(3);
  link.jitter_seed = 5;
  sim.set_default_link(link);
  sim.add_node("a", [&](const Delivery& d) {
    if (d.packet.tag != "req" && d.at < ms(400))
      sim.send("a", "b", wire_packet(ChannelKind::Di));
  });
  sim.add_node("b", [&](const Delivery& d) {
    if (d.packet.tag == "req") sim.send("b", "a", wire_packet(ChannelKind::Di, true));
  });
  sim.send("a", "b", wire_packet(ChannelKind::Di));
  sim.run_until(ms(1000));

  std::map<EventId, SimTime> send_at;
  for (const auto& e : sim.trace().entries())
    if (e.type == TraceType::Send) send_at[e.event] = e.at;
  int checked = 0;
  for (const auto& e : sim.trace().entries())
    if (e.type == TraceType::Deliver && e.channel) {
      REQUIRE(send_at.count(e.event));
      CHECK(e.at >= send_at[e.event] + ms(5));  // propagation + processing
      ++checked;
    }
  CHECK(checked > 5);
}

TEST_CASE("first initiated exchange is always the slowest with zero jitter") {
  Simulator sim;
  LinkModel link;
  link.propagation = ms(4);
  link.processing = ms(1);
  link.session_setup = ms(25);
  sim.set_default_link(link);
  sim.add_node("a", [](const Delivery&) {});
  sim.add_node("b", [](const Delivery&) {});

  std::vector<Duration> latencies;
  for (int i = 0; i < 20; ++i) {
    SimTime before = sim.now();
    SimTime at = sim.send("a", "b", wire_packet(ChannelKind::Di));
    latencies.push_back(at - before);
    sim.run_until(at);
  }
  for (std::size_t i = 1; i < latencies.size(); ++i) CHECK(latencies[0] > latencies[i]);
}
