#include "vsn/firecontour.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vsn/errors.hpp"

namespace vsn::fca {

using nlohmann::json;

namespace {

void check_params(const RateParams& params) {
  if (!(params.lambda_max > 0) || !(params.radius_m > 0))
    fail(ErrorCode::BadParams, "lambda_max and radius must be positive");
}

}  // namespace

double rate_model(double distance_m, const RateParams& params) {
  check_params(params);
  if (distance_m < 0) fail(ErrorCode::BadParams, "negative distance");
  return params.lambda_max * std::max(0.0, 1.0 - distance_m / params.radius_m);
}

double estimate_distance(double rate_per_s, const RateParams& params) {
  check_params(params);
  if (rate_per_s < 0) fail(ErrorCode::BadParams, "negative rate");
  if (rate_per_s > params.lambda_max)
    fail(ErrorCode::RateAboveMax, wire::format_decimal(rate_per_s) + " > lambda_max");
  // Exact inverse of the linear model; rate 0 reads "at or beyond R".
  return params.radius_m * (1.0 - rate_per_s / params.lambda_max);
}

ContourEstimate compute_contour(const std::vector<RateObservation>& observations,
                                const std::map<sim::NodeId, phys::Position>& positions,
                                const RateParams& params, int sectors) {
  check_params(params);
  if (sectors < 4) fail(ErrorCode::BadParams, "need at least 4 sectors");

  struct Positive {
    sim::NodeId node;
    phys::Position position;
    double rate;
    double distance;
  };
  std::vector<Positive> positive;
  ContourEstimate estimate;

  for (const auto& obs : observations) {
    auto it = positions.find(obs.node);
    if (it == positions.end()) fail(ErrorCode::UnknownNode, obs.node);
    double rate = std::min(obs.rate(), params.lambda_max);  // clamp Poisson excess
    double distance = estimate_distance(rate, params);
    estimate.distances.emplace_back(obs.node, distance);
    if (rate > 0) positive.push_back({obs.node, it->second, rate, distance});
  }
  std::sort(estimate.distances.begin(), estimate.distances.end());

  if (positive.size() < 3)
    fail(ErrorCode::TooFewReports,
         std::to_string(positive.size()) + " positive observations, need 3");

  // Origin: rate-weighted centroid of the positive reporters.
  double weight = 0, ox = 0, oy = 0;
  for (const auto& p : positive) {
    weight += p.rate;
    ox += p.rate * p.position.x;
    oy += p.rate * p.position.y;
  }
  estimate.origin = {ox / weight, oy / weight};
  estimate.confidence =
      static_cast<double>(positive.size()) / static_cast<double>(observations.size());

  // Angular profile: sensors sorted by bearing from the origin; duplicate
  // bearings collapse to their mean estimated distance.
  constexpr double tau = 2.0 * std::numbers::pi;
  struct Anchor {
    double angle;
    double distance;
  };
  std::vector<Anchor> anchors;
  {
    std::vector<Anchor> raw;
    for (const auto& p : positive) {
      double angle = std::atan2(p.position.y - estimate.origin.y,
                                p.position.x - estimate.origin.x);
      if (angle < 0) angle += tau;
      raw.push_back({angle, p.distance});
    }
    std::sort(raw.begin(), raw.end(), [](const Anchor& a, const Anchor& b) {
      return a.angle < b.angle;
    });
    for (const auto& a : raw) {
      if (!anchors.empty() && a.angle == anchors.back().angle) {
        anchors.back().distance = (anchors.back().distance + a.distance) / 2.0;
      } else {
        anchors.push_back(a);
      }
    }
  }

  for (int k = 0; k < sectors; ++k) {
    double theta = tau * k / sectors;
    double radius = 0;
    if (anchors.size() == 1) {
      radius = anchors.front().distance;
    } else {
      // Circular bracketing pair around theta.
      std::size_t next = 0;
      while (next < anchors.size() && anchors[next].angle < theta) ++next;
      std::size_t prev = next == 0 ? anchors.size() - 1 : next - 1;
      next = next == anchors.size() ? 0 : next;
      double a0 = anchors[prev].angle;
      double a1 = anchors[next].angle;
      double span = a1 - a0;
      double offset = theta - a0;
      if (span <= 0) span += tau;
      if (offset < 0) offset += tau;
      double w = span == 0 ? 0.0 : offset / span;
      radius = anchors[prev].distance + w * (anchors[next].distance - anchors[prev].distance);
    }
    estimate.contour.push_back({theta, radius});
  }
  return estimate;
}

json contour_to_json(const ContourEstimate& estimate) {
  json sectors = json::array();
  for (const auto& s : estimate.contour)
    sectors.push_back({{"angle_rad", s.angle_rad}, {"radius_m", s.radius_m}});
  json distances = json::object();
  for (const auto& [node, distance] : estimate.distances) distances[node] = distance;
  return {{"origin", {{"x", estimate.origin.x}, {"y", estimate.origin.y}}},
          {"sectors", sectors},
          {"confidence", estimate.confidence},
          {"estimated_distances_m", distances}};
}

std::string contour_csv(const std::vector<RateObservation>& observations,
                        const ContourEstimate& estimate, const RateParams& params) {
  std::map<sim::NodeId, double> distance_of(estimate.distances.begin(),
                                            estimate.distances.end());
  std::string out = "node,rate_per_s,estimated_distance_m\n";
  std::vector<RateObservation> sorted = observations;
  std::sort(sorted.begin(), sorted.end(),
            [](const RateObservation& a, const RateObservation& b) { return a.node < b.node; });
  for (const auto& obs : sorted) {
    double clamped = std::min(obs.rate(), params.lambda_max);
    out += obs.node + "," + wire::format_decimal(clamped) + "," +
           wire::format_decimal(distance_of.count(obs.node) ? distance_of[obs.node]
                                                            : params.radius_m) +
           "\n";
  }
  return out;
}

// ---------------- FireMonitor ----------------

void FireMonitor::note_notification(const sim::NodeId& sensor, sim::SimTime sample_time) {
  notifications_[sensor].push_back(sample_time);
}

std::uint64_t FireMonitor::count_in_window(const sim::NodeId& sensor, sim::SimTime now) const {
  auto it = notifications_.find(sensor);
  if (it == notifications_.end()) return 0;
  sim::SimTime start = now > config_.window ? now - config_.window : 0;
  std::uint64_t count = 0;
  for (sim::SimTime t : it->second)
    if (t > start && t <= now) ++count;
  return count;
}

bool FireMonitor::should_trigger_round(const FireEvent& event, bool overlay_ready) {
  if (!overlay_ready) fail(ErrorCode::OverlayNotReady, "fire event before overlay ready");
  sim::SimTime now = event.received_at;

  auto last = last_trigger_.find(event.reporter);
  if (last != last_trigger_.end() && now - last->second < config_.debounce) return false;
  if (round_in_flight_) return false;
  if (last_round_started_ && now - *last_round_started_ < config_.round_interval)
    return false;

  last_trigger_[event.reporter] = now;
  return true;
}

std::uint64_t FireMonitor::begin_round(const sim::NodeId& reporter,
                                       sim::SimTime multicast_sent,
                                       const std::set<sim::NodeId>& expected_repliers) {
  Round round;
  round.id = next_round_++;
  round.reporter = reporter;
  round.multicast_sent = multicast_sent;
  round.expected = expected_repliers;
  round_in_flight_ = !expected_repliers.empty();
  last_round_started_ = multicast_sent;
  rounds_[round.id] = std::move(round);
  return next_round_ - 1;
}

const FireMonitor::Round* FireMonitor::record_reply(
    std::uint64_t round_id, const sim::NodeId& member,
    const std::vector<RateObservation>& observations, sim::SimTime at) {
  auto it = rounds_.find(round_id);
  if (it == rounds_.end()) return nullptr;
  Round& round = it->second;
  if (!round.expected.count(member) || round.replies.count(member)) return nullptr;
  round.replies[member] = at;
  for (const auto& obs : observations) reported_[obs.node] = obs;
  if (round.replies.size() == round.expected.size()) {
    round.complete = true;
    round_in_flight_ = false;
    return &round;
  }
  return nullptr;
}

std::vector<RateObservation> FireMonitor::observations(
    sim::SimTime now, const std::vector<sim::NodeId>& all_sensors) const {
  std::vector<RateObservation> out;
  for (const auto& sensor : all_sensors) {
    auto it = reported_.find(sensor);
    if (it != reported_.end()) {
      out.push_back(it->second);
    } else {
      // No peer reported this sensor (it was the reporter's); fall back to
      // the notifications this application received itself.
      RateObservation obs;
      obs.node = sensor;
      obs.window_s = sim::to_seconds(config_.window);
      obs.count = count_in_window(sensor, now);
      out.push_back(obs);
    }
  }
  return out;
}

std::size_t FireMonitor::notification_total() const {
  std::size_t total = 0;
  for (const auto& [sensor, times] : notifications_) total += times.size();
  return total;
}

}  // namespace vsn::fca
