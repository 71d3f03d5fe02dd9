#include <algorithm>
#include <cmath>
#include <random>

#include "vsn/errors.hpp"
#include "vsn/firecontour.hpp"

#include "doctest.h"

using namespace vsn;
using namespace vsn::fca;

namespace {

const RateParams kParams{1.0, 500.0};

// Geometric oracle: convex hull via monotone chain, then signed-area
// containment with a small tolerance for degenerate (collinear) hulls.
std::vector<phys::Position> convex_hull(std::vector<phys::Position> points) {
  std::sort(points.begin(), points.end(), [](const auto& a, const auto& b) {
    return a.x != b.x ? a.x < b.x : a.y < b.y;
  });
  auto cross = [](const phys::Position& o, const phys::Position& a,
                  const phys::Position& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
  };
  std::vector<phys::Position> hull(2 * points.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], points[i]) <= 0) --k;
    hull[k++] = points[i];
  }
  for (std::size_t i = points.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], points[i - 1]) <= 0) --k;
    hull[k++] = points[i - 1];
  }
  hull.resize(k > 1 ? k - 1 : k);
  return hull;
}

bool point_in_hull(const phys::Position& p, const std::vector<phys::Position>& points) {
  if (points.size() < 3) {
    // Degenerate: accept anything within the bounding segment, with slack.
    double min_x = 1e18, max_x = -1e18, min_y = 1e18, max_y = -1e18;
    for (const auto& q : points) {
      min_x = std::min(min_x, q.x);
      max_x = std::max(max_x, q.x);
      min_y = std::min(min_y, q.y);
      max_y = std::max(max_y, q.y);
    }
    return p.x >= min_x - 1e-9 && p.x <= max_x + 1e-9 && p.y >= min_y - 1e-9 &&
           p.y <= max_y + 1e-9;
  }
  auto hull = convex_hull(points);
  if (hull.size() < 3) return point_in_hull(p, {hull.begin(), hull.end()});
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const auto& a = hull[i];
    const auto& b = hull[(i + 1) % hull.size()];
    double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    if (cross < -1e-9) return false;
  }
  return true;
}

RateObservation obs_of(const std::string& node, double rate, double window_s = 100.0) {
  RateObservation obs;
  obs.node = node;
  obs.window_s = window_s;
  obs.count = static_cast<std::uint64_t>(rate * window_s + 0.5);
  return obs;
}

}  // namespace

TEST_CASE("rate model endpoints and midpoint") {
  CHECK(rate_model(0.0, kParams) == 1.0);
  CHECK(rate_model(500.0, kParams) == 0.0);
  CHECK(rate_model(750.0, kParams) == 0.0);
  CHECK(rate_model(250.0, kParams) == 0.5);
}

TEST_CASE("rate model rejects bad parameters") {
  CHECK_THROWS_AS(rate_model(-1.0, kParams), Error);
  CHECK_THROWS_AS(rate_model(1.0, RateParams{0.0, 500.0}), Error);
  CHECK_THROWS_AS(rate_model(1.0, RateParams{1.0, 0.0}), Error);
}

TEST_CASE("distance estimation inverts the model at the endpoints") {
  CHECK(estimate_distance(1.0, kParams) == 0.0);
  CHECK(estimate_distance(0.0, kParams) == 500.0);  // "at or beyond R"
  try {
    estimate_distance(1.5, kParams);
    FAIL("expected RateAboveMax");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RateAboveMax);
  }
}

TEST_CASE("inversion identity holds to 1e-9 relative error across [0, R]") {
  for (int i = 0; i <= 1000; ++i) {
    double d = kParams.radius_m * i / 1000.0;
    double back = estimate_distance(rate_model(d, kParams), kParams);
    CHECK(std::abs(back - d) <= 1e-9 * std::max(1.0, std::abs(d)));
  }
}

TEST_CASE("noise-free rate ordering equals distance ordering exactly") {
  std::mt19937_64 rng(2718);
  for (int round = 0; round < 200; ++round) {
    int n = std::uniform_int_distribution<int>(3, 8)(rng);
    std::vector<double> distances;
    for (int i = 0; i < n; ++i)
      distances.push_back(std::uniform_real_distribution<double>(0.0, 499.0)(rng));
    std::sort(distances.begin(), distances.end());
    bool too_close = false;
    for (int i = 1; i < n; ++i) too_close = too_close || distances[i] - distances[i - 1] < 0.1;
    if (too_close) continue;

    std::vector<std::pair<double, int>> by_rate;
    for (int i = 0; i < n; ++i)
      by_rate.emplace_back(rate_model(distances[i], kParams), i);
    std::sort(by_rate.begin(), by_rate.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    for (int i = 0; i < n; ++i) CHECK(by_rate[i].second == i);
  }
}

TEST_CASE("equidistant sensors give a circular contour at their distance") {
  std::map<sim::NodeId, phys::Position> positions = {
      {"e", {100.0, 0.0}}, {"n", {0.0, 100.0}}, {"w", {-100.0, 0.0}}, {"s", {0.0, -100.0}}};
  double rate = rate_model(100.0, kParams);
  std::vector<RateObservation> observations;
  for (const auto& [node, p] : positions) observations.push_back(obs_of(node, rate));

  auto estimate = compute_contour(observations, positions, kParams, 12);
  CHECK(std::abs(estimate.origin.x) < 1e-9);
  CHECK(std::abs(estimate.origin.y) < 1e-9);
  CHECK(estimate.confidence == 1.0);
  REQUIRE(estimate.contour.size() == 12);
  for (const auto& sector : estimate.contour)
    CHECK(sector.radius_m == doctest::Approx(100.0).epsilon(1e-9));
}

TEST_CASE("fewer than three positive observations is an error") {
  std::map<sim::NodeId, phys::Position> positions = {
      {"a", {0, 0}}, {"b", {10, 0}}, {"c", {20, 0}}};
  std::vector<RateObservation> observations = {obs_of("a", 0.5), obs_of("b", 0.2),
                                               obs_of("c", 0.0)};
  try {
    compute_contour(observations, positions, kParams, 12);
    FAIL("expected TooFewReports");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooFewReports);
  }
}

TEST_CASE("estimated origin stays inside the hull of positive reporters") {
  std::mt19937_64 rng(160493);
  int tested = 0;
  for (int round = 0; round < 100; ++round) {
    // 3 x 2 sensor grid, fire somewhere in or near it.
    std::map<sim::NodeId, phys::Position> positions;
    int k = 0;
    for (int gx = 0; gx < 3; ++gx)
      for (int gy = 0; gy < 2; ++gy)
        positions["n" + std::to_string(k++)] = {gx * 200.0, gy * 150.0};
    phys::Position origin{std::uniform_real_distribution<double>(-300, 700)(rng),
                          std::uniform_real_distribution<double>(-300, 450)(rng)};

    std::vector<RateObservation> observations;
    std::vector<phys::Position> positive_positions;
    for (const auto& [node, p] : positions) {
      double rate = rate_model(phys::distance(p, origin), kParams);
      observations.push_back(obs_of(node, rate));
      if (observations.back().rate() > 0) positive_positions.push_back(p);
    }
    if (positive_positions.size() < 3) continue;
    ++tested;
    auto estimate = compute_contour(observations, positions, kParams, 12);
    CHECK(point_in_hull(estimate.origin, positive_positions));
  }
  CHECK(tested >= 60);  // the sampling box keeps most rounds meaningful
}

TEST_CASE("rotating the arrangement by ninety degrees rotates the contour") {
  std::map<sim::NodeId, phys::Position> positions = {{"a", {120.0, 30.0}},
                                                     {"b", {-40.0, 90.0}},
                                                     {"c", {-110.0, -60.0}},
                                                     {"d", {70.0, -140.0}},
                                                     {"e", {200.0, 160.0}}};
  phys::Position fire{20.0, 10.0};
  std::vector<RateObservation> observations;
  for (const auto& [node, p] : positions)
    observations.push_back(obs_of(node, rate_model(phys::distance(p, fire), kParams)));
  auto base = compute_contour(observations, positions, kParams, 12);

  // Rotate sensors (and implicitly the fire) by 90 degrees about the origin
  // estimate; rates are distance-based and unchanged.
  std::map<sim::NodeId, phys::Position> rotated;
  for (const auto& [node, p] : positions) {
    double dx = p.x - base.origin.x;
    double dy = p.y - base.origin.y;
    rotated[node] = {base.origin.x - dy, base.origin.y + dx};
  }
  auto turned = compute_contour(observations, rotated, kParams, 12);

  CHECK(turned.origin.x == doctest::Approx(base.origin.x).epsilon(1e-9));
  CHECK(turned.origin.y == doctest::Approx(base.origin.y).epsilon(1e-9));
  REQUIRE(turned.contour.size() == 12);
  for (int k = 0; k < 12; ++k) {
    int shifted = (k + 3) % 12;  // 90 degrees = 3 sectors of 30 degrees
    CHECK(turned.contour[shifted].radius_m ==
          doctest::Approx(base.contour[k].radius_m).epsilon(1e-9));
  }
}

TEST_CASE("contour artifacts serialize for offline plotting") {
  std::map<sim::NodeId, phys::Position> positions = {
      {"a", {100, 0}}, {"b", {0, 100}}, {"c", {-100, 0}}};
  std::vector<RateObservation> observations = {obs_of("a", 0.8), obs_of("b", 0.5),
                                               obs_of("c", 0.3)};
  auto estimate = compute_contour(observations, positions, kParams, 12);
  auto document = contour_to_json(estimate);
  CHECK(document.contains("origin"));
  CHECK(document["sectors"].size() == 12);
  CHECK(document["confidence"] == 1.0);
  auto csv = contour_csv(observations, estimate, kParams);
  CHECK(csv.rfind("node,rate_per_s,estimated_distance_m\n", 0) == 0);
  CHECK(csv.find("\na,") != std::string::npos);
}

TEST_CASE("fire monitor debounces duplicate reports from the same sensor") {
  MonitorConfig config;
  config.debounce = sim::ms(500);
  config.round_interval = 0;
  FireMonitor monitor(config);

  fca::FireEvent event{"s01", {"s01", "temperature", "Cel", 70.0, 10.0}, sim::ms(10000)};
  CHECK(monitor.should_trigger_round(event, true));
  monitor.begin_round("s01", sim::ms(10000), {});

  fca::FireEvent duplicate{"s01", {"s01", "temperature", "Cel", 71.0, 10.2},
                           sim::ms(10200)};
  CHECK_FALSE(monitor.should_trigger_round(duplicate, true));

  fca::FireEvent later{"s01", {"s01", "temperature", "Cel", 72.0, 10.9}, sim::ms(10900)};
  CHECK(monitor.should_trigger_round(later, true));
}

TEST_CASE("fire events before the overlay is ready are an error") {
  FireMonitor monitor(MonitorConfig{});
  fca::FireEvent event{"s01", {"s01", "temperature", "Cel", 70.0, 1.0}, sim::ms(1000)};
  try {
    monitor.should_trigger_round(event, false);
    FAIL("expected OverlayNotReady");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OverlayNotReady);
  }
}

TEST_CASE("rounds complete when every expected member replied") {
  MonitorConfig config;
  FireMonitor monitor(config);
  auto round = monitor.begin_round("s01", sim::ms(1000), {"g2", "g3"});
  CHECK(monitor.record_reply(round, "g2", {obs_of("s02", 0.4, 60.0)}, sim::ms(1010)) ==
        nullptr);
  CHECK(monitor.record_reply(round, "stranger", {}, sim::ms(1011)) == nullptr);
  const auto* complete =
      monitor.record_reply(round, "g3", {obs_of("s03", 0.2, 60.0)}, sim::ms(1020));
  REQUIRE(complete != nullptr);
  CHECK(complete->complete);
  CHECK(complete->replies.size() == 2);
}

TEST_CASE("the reporter's own rate comes from the monitor's notification log") {
  MonitorConfig config;
  config.window = sim::ms(60000);
  FireMonitor monitor(config);
  for (int i = 0; i < 12; ++i)
    monitor.note_notification("s01", sim::ms(30000) + i * sim::ms(2000));
  auto round = monitor.begin_round("s01", sim::ms(60000), {"g2"});
  monitor.record_reply(round, "g2", {obs_of("s02", 0.5, 60.0)}, sim::ms(60050));

  auto observations = monitor.observations(sim::ms(60050), {"s01", "s02"});
  REQUIRE(observations.size() == 2);
  CHECK(observations[0].node == "s01");
  CHECK(observations[0].count == 12);  // fell back to the app's own counts
  CHECK(observations[1].node == "s02");
  CHECK(observations[1].count == 30);
}
