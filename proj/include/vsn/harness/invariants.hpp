#ifndef VSN_HARNESS_INVARIANTS_HPP
#define VSN_HARNESS_INVARIANTS_HPP

#include <map>
#include <set>
#include <string>
#include <vector>

#include "vsn/harness/metrics.hpp"
#include "vsn/simkernel.hpp"

namespace vsn::harness {

/// Everything the per-iteration invariant suite needs besides the trace.
struct IterationFacts {
  int iteration = 0;
  std::set<sim::NodeId> type_a;
  std::set<sim::NodeId> type_b_sensing;
  std::set<sim::NodeId> app_nodes;
  std::map<std::string, std::vector<sim::NodeId>> overlay_members;
  std::map<std::string, sim::NodeId> overlay_rendezvous;
  std::map<std::string, sim::NodeId> overlay_app_node;
  sim::Duration min_link_delay = 0;  // propagation + processing
  bool session_setup_positive = false;
  bool zero_jitter = true;
  bool baseline = false;
};

/// Runs the structural invariant suite over one iteration's trace.
/// Returns human-readable violation descriptions; empty means all passed.
std::vector<std::string> check_invariants(const sim::Trace& trace,
                                          const IterationFacts& facts,
                                          const MetricsCollector& metrics);

/// Parse "task:bn@t" correlations; returns bn or empty.
std::string correlation_origin(const std::string& correlation);

}  // namespace vsn::harness

#endif
