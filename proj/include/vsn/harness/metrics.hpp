#ifndef VSN_HARNESS_METRICS_HPP
#define VSN_HARNESS_METRICS_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vsn/simkernel.hpp"

#include "json.hpp"

namespace vsn::harness {

enum class MetricKind { HPD, OCD, FND };
const char* to_string(MetricKind kind);

/// One delay measurement, in simulated milliseconds, taken at the sender.
struct MetricSample {
  MetricKind kind = MetricKind::HPD;
  double value_ms = 0.0;
  int iteration = 0;
  std::string context;  // "g1->city-admin" for HPD, overlay id for OCD/FND
};

struct Exchange {
  sim::SimTime request_sent = 0;
  std::optional<sim::SimTime> response_received;
};

struct OverlayCreation {
  sim::SimTime started = 0;
  std::optional<sim::SimTime> ready;
};

struct NotificationRound {
  sim::SimTime multicast_sent = 0;
  std::size_t expected = 0;
  std::vector<sim::SimTime> replies;
};

MetricSample measure_hpd(const Exchange& exchange, int iteration,
                         const std::string& context);  // NoResponse
MetricSample measure_ocd(const OverlayCreation& creation, int iteration,
                         const std::string& context);  // NeverReady
MetricSample measure_fnd(const NotificationRound& round, int iteration,
                         const std::string& context);  // IncompleteRound

/// 100 * (fnd - hpd) / hpd.
double overhead_pct(double fnd_mean_ms, double hpd_mean_ms);  // ZeroBaseline

double mean(const std::vector<double>& values);

class MetricsCollector {
public:
  void add(MetricSample sample);
  const std::vector<MetricSample>& samples() const { return samples_; }

  std::vector<double> series(MetricKind kind, const std::string& context = "",
                             std::optional<int> iteration = std::nullopt) const;
  std::vector<std::string> contexts(MetricKind kind) const;
  std::optional<double> mean_of(MetricKind kind, const std::string& context = "") const;

  /// Fixed column order: kind,iteration,context,value_ms.
  std::string to_csv() const;
  nlohmann::json to_json() const;

private:
  std::vector<MetricSample> samples_;
};

}  // namespace vsn::harness

#endif
