#include "vsn/harness/metrics.hpp"

#include <algorithm>

#include "vsn/errors.hpp"
#include "vsn/senml.hpp"

namespace vsn::harness {

const char* to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::HPD: return "HPD";
    case MetricKind::OCD: return "OCD";
    case MetricKind::FND: return "FND";
  }
  return "?";
}

MetricSample measure_hpd(const Exchange& exchange, int iteration,
                         const std::string& context) {
  if (!exchange.response_received)
    fail(ErrorCode::NoResponse, "exchange has no response");
  MetricSample sample;
  sample.kind = MetricKind::HPD;
  sample.value_ms = sim::to_ms(*exchange.response_received - exchange.request_sent);
  sample.iteration = iteration;
  sample.context = context;
  return sample;
}

MetricSample measure_ocd(const OverlayCreation& creation, int iteration,
                         const std::string& context) {
  if (!creation.ready) fail(ErrorCode::NeverReady, context);
  MetricSample sample;
  sample.kind = MetricKind::OCD;
  sample.value_ms = sim::to_ms(*creation.ready - creation.started);
  sample.iteration = iteration;
  sample.context = context;
  return sample;
}

MetricSample measure_fnd(const NotificationRound& round, int iteration,
                         const std::string& context) {
  if (round.replies.size() < round.expected || round.replies.empty())
    fail(ErrorCode::IncompleteRound,
         std::to_string(round.replies.size()) + " of " + std::to_string(round.expected) +
             " replies");
  sim::SimTime last = *std::max_element(round.replies.begin(), round.replies.end());
  MetricSample sample;
  sample.kind = MetricKind::FND;
  sample.value_ms = sim::to_ms(last - round.multicast_sent);
  sample.iteration = iteration;
  sample.context = context;
  return sample;
}

double overhead_pct(double fnd_mean_ms, double hpd_mean_ms) {
  if (!(hpd_mean_ms > 0)) fail(ErrorCode::ZeroBaseline, "hpd mean must be > 0");
  return 100.0 * (fnd_mean_ms - hpd_mean_ms) / hpd_mean_ms;
}

double mean(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double sum = 0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

void MetricsCollector::add(MetricSample sample) { samples_.push_back(std::move(sample)); }

std::vector<double> MetricsCollector::series(MetricKind kind, const std::string& context,
                                             std::optional<int> iteration) const {
  std::vector<double> out;
  for (const auto& s : samples_) {
    if (s.kind != kind) continue;
    if (!context.empty() && s.context != context) continue;
    if (iteration && s.iteration != *iteration) continue;
    out.push_back(s.value_ms);
  }
  return out;
}

std::vector<std::string> MetricsCollector::contexts(MetricKind kind) const {
  std::vector<std::string> out;
  for (const auto& s : samples_)
    if (s.kind == kind && std::find(out.begin(), out.end(), s.context) == out.end())
      out.push_back(s.context);
  return out;
}

std::optional<double> MetricsCollector::mean_of(MetricKind kind,
                                                const std::string& context) const {
  auto values = series(kind, context);
  if (values.empty()) return std::nullopt;
  return mean(values);
}

std::string MetricsCollector::to_csv() const {
  std::string out = "kind,iteration,context,value_ms\n";
  for (const auto& s : samples_) {
    out += to_string(s.kind);
    out += ',';
    out += std::to_string(s.iteration);
    out += ',';
    out += s.context;
    out += ',';
    out += wire::format_decimal(s.value_ms);
    out += '\n';
  }
  return out;
}

nlohmann::json MetricsCollector::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& s : samples_)
    out.push_back({{"kind", to_string(s.kind)},
                   {"iteration", s.iteration},
                   {"context", s.context},
                   {"value_ms", s.value_ms}});
  return out;
}

}  // namespace vsn::harness
