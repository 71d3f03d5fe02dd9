#ifndef VSN_HARNESS_RUNNER_HPP
#define VSN_HARNESS_RUNNER_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vsn/firecontour.hpp"
#include "vsn/harness/config.hpp"
#include "vsn/harness/invariants.hpp"
#include "vsn/harness/metrics.hpp"

namespace vsn::harness {

struct IterationResult {
  sim::Trace trace;
  IterationFacts facts;
  std::optional<fca::ContourEstimate> contour;
  std::vector<fca::RateObservation> observations;
};

struct RunReport {
  std::string scenario_name;
  std::uint64_t seed = 0;
  int iterations = 1;
  bool baseline = false;
  MetricsCollector metrics;
  std::vector<IterationResult> results;
  std::vector<std::string> violations;
  std::optional<double> hpd_mean_ms;
  std::optional<double> ocd_mean_ms;
  std::optional<double> fnd_mean_ms;
  std::optional<double> overhead_vs_hpd_pct;
  std::optional<fca::ContourEstimate> contour;
  std::vector<fca::RateObservation> contour_observations;
  fca::RateParams contour_params;
  std::string events_log;
  std::string metrics_csv;
  nlohmann::json report_json;
  nlohmann::json registry_snapshot;

  bool passed() const { return violations.empty(); }
};

/// Execute the scenario: `iterations` independent runs from fresh state
/// (iteration i uses seed + i), invariant suite over every trace, metrics
/// and report assembly. Throws ConfigInvalid on a bad configuration.
RunReport run_scenario(const ScenarioConfig& config);

/// Write metrics/report/event-log/contour artifacts under out_dir.
/// format is "csv" or "json" (metrics file only; the report is always JSON).
void write_outputs(const RunReport& report, const std::string& out_dir,
                   const std::string& format);

/// Recompute the fire contour offline from an event log produced by
/// run_scenario (uses the embedded roster/parameters preamble).
nlohmann::json contour_from_eventlog(std::istream& in);

}  // namespace vsn::harness

#endif
