#include "vsn/harness/invariants.hpp"

#include <algorithm>

#include "vsn/senml.hpp"

namespace vsn::harness {

std::string correlation_origin(const std::string& correlation) {
  auto colon = correlation.find(':');
  auto at = correlation.find('@');
  if (colon == std::string::npos || at == std::string::npos || at <= colon + 1) return "";
  return correlation.substr(colon + 1, at - colon - 1);
}

std::vector<std::string> check_invariants(const sim::Trace& trace,
                                          const IterationFacts& facts,
                                          const MetricsCollector& metrics) {
  std::vector<std::string> violations;
  auto violation = [&](const std::string& what) {
    violations.push_back("iteration " + std::to_string(facts.iteration) + ": " + what);
  };
  const auto& entries = trace.entries();

  // Path separation: Di and Ci are disjoint by construction; assert the
  // payload discipline directly on the log.
  for (const auto& e : entries) {
    if (!e.channel) continue;
    if (*e.channel == ChannelKind::Ci && e.content_format == wire::kContentFormatSenmlJson)
      violation("SenML payload on Ci (seq " + std::to_string(e.seq) + ")");
    if (*e.channel == ChannelKind::Di && e.type == sim::TraceType::Send &&
        (e.tag == "data" || e.tag == "fire-event") &&
        e.content_format != wire::kContentFormatSenmlJson)
      violation("Di data message without SenML content format (seq " +
                std::to_string(e.seq) + ")");
  }

  // Delegation: TypeA node ids never appear in overlay membership.
  for (const auto& [overlay_id, members] : facts.overlay_members)
    for (const auto& member : members)
      if (facts.type_a.count(member))
        violation("TypeA node " + member + " is a member of " + overlay_id);
  for (const auto& e : entries)
    if (e.type == sim::TraceType::Local && e.tag == "member-added" &&
        facts.type_a.count(e.correlation))
      violation("TypeA node " + e.correlation + " admitted to " + e.overlay);

  // Every TypeA-originated Di message crossed exactly one Gi hop; TypeB
  // originated ones crossed none.
  {
    std::map<std::string, int> gi_hops;  // correlation -> deliver count
    for (const auto& e : entries)
      if (e.type == sim::TraceType::Deliver && e.channel &&
          *e.channel == ChannelKind::Gi && e.tag == "gi-data")
        ++gi_hops[e.correlation];
    for (const auto& e : entries) {
      if (e.type != sim::TraceType::Send || !e.channel || *e.channel != ChannelKind::Di)
        continue;
      if (e.tag != "data" && e.tag != "fire-event") continue;
      std::string origin = correlation_origin(e.correlation);
      if (origin.empty()) continue;
      int hops = gi_hops.count(e.correlation) ? gi_hops[e.correlation] : 0;
      if (facts.type_a.count(origin) && hops != 1)
        violation("Di message " + e.correlation + " from TypeA crossed " +
                  std::to_string(hops) + " Gi hops");
      if (facts.type_b_sensing.count(origin) && hops != 0)
        violation("Di message " + e.correlation + " from TypeB crossed a Gi hop");
    }
  }

  // Overlay lifecycle: join < task delivery < first Di data, per member.
  for (const auto& [overlay_id, members] : facts.overlay_members) {
    auto app_it = facts.overlay_app_node.find(overlay_id);
    if (app_it == facts.overlay_app_node.end()) continue;
    for (const auto& member : members) {
      std::uint64_t join_at = 0, task_at = 0, data_at = 0;
      for (const auto& e : entries) {
        if (join_at == 0 && e.type == sim::TraceType::Deliver && e.tag == "join-ack" &&
            e.overlay == overlay_id && e.to == member)
          join_at = e.at;
        if (task_at == 0 && e.type == sim::TraceType::Deliver && e.tag == "task-delivery" &&
            e.overlay == overlay_id && e.to == member)
          task_at = e.at;
        if (data_at == 0 && e.type == sim::TraceType::Send && e.channel &&
            *e.channel == ChannelKind::Di && e.from == member && e.to == app_it->second &&
            (e.tag == "data" || e.tag == "fire-event"))
          data_at = e.at;
      }
      if (join_at == 0 || task_at == 0 || data_at == 0) {
        violation(overlay_id + "/" + member + ": lifecycle stage missing (join " +
                  std::to_string(join_at) + ", task " + std::to_string(task_at) +
                  ", data " + std::to_string(data_at) + ")");
        continue;
      }
      if (!(join_at < task_at && task_at < data_at))
        violation(overlay_id + "/" + member + ": lifecycle out of order (join " +
                  std::to_string(join_at) + ", task " + std::to_string(task_at) +
                  ", data " + std::to_string(data_at) + ")");
    }
  }

  // Overlay isolation: group traffic only reaches members (or the rendezvous).
  for (const auto& e : entries) {
    if (e.type != sim::TraceType::Deliver || e.overlay.empty()) continue;
    if (e.tag != "group-multicast" && e.tag != "direct-reply") continue;
    auto members = facts.overlay_members.find(e.overlay);
    if (members == facts.overlay_members.end()) continue;
    bool is_member = std::find(members->second.begin(), members->second.end(), e.to) !=
                     members->second.end();
    auto rendezvous = facts.overlay_rendezvous.find(e.overlay);
    bool is_rendezvous =
        rendezvous != facts.overlay_rendezvous.end() && rendezvous->second == e.to;
    if (!is_member && !is_rendezvous)
      violation("overlay " + e.overlay + " message leaked to " + e.to + " (seq " +
                std::to_string(e.seq) + ")");
  }

  // Heterogeneity: when the roster mixes sensor kinds, applications heard
  // from both.
  if (!facts.type_a.empty() && !facts.type_b_sensing.empty()) {
    bool from_a = false, from_b = false;
    for (const auto& e : entries) {
      if (e.type != sim::TraceType::Deliver || !e.channel ||
          *e.channel != ChannelKind::Di || !facts.app_nodes.count(e.to))
        continue;
      if (e.tag != "data" && e.tag != "fire-event") continue;
      std::string origin = correlation_origin(e.correlation);
      from_a = from_a || facts.type_a.count(origin) > 0;
      from_b = from_b || facts.type_b_sensing.count(origin) > 0;
    }
    if (!from_a || !from_b)
      violation(std::string("applications missing data from ") +
                (!from_a ? "TypeA" : "TypeB") + " sensors");
  }

  // First-exchange spike per HPD series.
  if (facts.session_setup_positive && facts.zero_jitter) {
    for (const auto& context : metrics.contexts(MetricKind::HPD)) {
      auto series = metrics.series(MetricKind::HPD, context, facts.iteration);
      for (std::size_t i = 1; i < series.size(); ++i)
        if (series[0] <= series[i]) {
          violation("HPD series " + context + ": sample 1 (" +
                    wire::format_decimal(series[0]) + " ms) not above sample " +
                    std::to_string(i + 1) + " (" + wire::format_decimal(series[i]) + " ms)");
          break;
        }
    }
  }

  // Causality: deliveries never precede send + minimum link delay.
  {
    std::map<sim::EventId, const sim::TraceEntry*> sends;
    for (const auto& e : entries)
      if (e.type == sim::TraceType::Send) sends[e.event] = &e;
    for (const auto& e : entries) {
      if (e.type != sim::TraceType::Deliver || !e.channel) continue;
      auto send = sends.find(e.event);
      if (send == sends.end()) continue;
      if (e.at < send->second->at + facts.min_link_delay)
        violation("event " + std::to_string(e.event) + " delivered before causal bound");
      if (e.at != send->second->deliver_at)
        violation("event " + std::to_string(e.event) + " delivery time mismatch");
    }
  }

  // Report completeness: metric samples are traceable to log entries.
  {
    std::map<std::string, std::size_t> di_sends;  // "from->to" -> count
    std::size_t ready_marks = 0, round_completes = 0;
    for (const auto& e : entries) {
      if (e.type == sim::TraceType::Send && e.channel && *e.channel == ChannelKind::Di &&
          (e.tag == "data" || e.tag == "fire-event"))
        ++di_sends[e.from + "->" + e.to];
      if (e.type == sim::TraceType::Local && e.tag == "overlay-ready") ++ready_marks;
      if (e.type == sim::TraceType::Local && e.tag == "round-complete") ++round_completes;
    }
    for (const auto& context : metrics.contexts(MetricKind::HPD)) {
      auto samples = metrics.series(MetricKind::HPD, context, facts.iteration);
      if (samples.size() > di_sends[context])
        violation("HPD samples for " + context + " exceed logged Di posts");
    }
    if (metrics.series(MetricKind::OCD, "", facts.iteration).size() > ready_marks)
      violation("OCD samples exceed overlay-ready marks");
    if (metrics.series(MetricKind::FND, "", facts.iteration).size() > round_completes)
      violation("FND samples exceed completed rounds");
  }

  return violations;
}

}  // namespace vsn::harness
