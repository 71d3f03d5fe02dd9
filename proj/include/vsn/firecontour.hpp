#ifndef VSN_FIRECONTOUR_HPP
#define VSN_FIRECONTOUR_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vsn/overlaynet.hpp"
#include "vsn/physnode.hpp"
#include "vsn/senml.hpp"
#include "vsn/simkernel.hpp"

#include "json.hpp"

namespace vsn::fca {

/// Linear notification-rate model with cutoff: rate = lambda_max * (1 - d/R)
/// for d in [0, R], zero beyond. Strictly decreasing on [0, R], so distance
/// is recoverable from an observed rate by exact inversion.
struct RateParams {
  double lambda_max = 1.0;  // notifications per second at distance 0
  double radius_m = 500.0;  // no notifications at or beyond this distance
};

double rate_model(double distance_m, const RateParams& params);        // BadParams
double estimate_distance(double rate_per_s, const RateParams& params);  // RateAboveMax

struct RateObservation {
  sim::NodeId node;
  double window_s = 1.0;
  std::uint64_t count = 0;

  double rate() const { return static_cast<double>(count) / window_s; }
};

struct SectorRadius {
  double angle_rad = 0.0;
  double radius_m = 0.0;
};

struct ContourEstimate {
  phys::Position origin;  // rate-weighted centroid of positive reporters
  std::vector<std::pair<sim::NodeId, double>> distances;  // per node, by id
  std::vector<SectorRadius> contour;                      // ascending angle
  double confidence = 0.0;  // fraction of sensors with positive rate
};

constexpr int kDefaultSectors = 12;

/// Needs at least three positive-rate observations (TooFewReports).
/// Rates above lambda_max are clamped before inversion.
ContourEstimate compute_contour(const std::vector<RateObservation>& observations,
                                const std::map<sim::NodeId, phys::Position>& positions,
                                const RateParams& params, int sectors = kDefaultSectors);

nlohmann::json contour_to_json(const ContourEstimate& estimate);
std::string contour_csv(const std::vector<RateObservation>& observations,
                        const ContourEstimate& estimate, const RateParams& params);

struct FireEvent {
  sim::NodeId reporter;
  wire::SenMLRecord reading;
  sim::SimTime received_at = 0;
};

struct MonitorConfig {
  RateParams params;
  sim::Duration window = 60 * 1000 * 1000;          // observation window
  sim::Duration debounce = 500 * 1000;              // per-reporter duplicate window
  sim::Duration round_interval = 15 * 1000 * 1000;  // spacing between rounds
  sim::Duration compute_cost = 200;                 // peer-side FCA execution cost
  int sectors = kDefaultSectors;
};

/// Round/observation bookkeeping for the city application: debouncing of
/// duplicate fire events, notification counting, reply collection and the
/// contour over the merged observations. Pure state; the owning machine does
/// the sending.
class FireMonitor {
public:
  explicit FireMonitor(MonitorConfig config) : config_(std::move(config)) {}

  const MonitorConfig& config() const { return config_; }

  /// Count one fire notification POST received from `sensor`.
  void note_notification(const sim::NodeId& sensor, sim::SimTime sample_time);

  /// Decide whether this event starts a new notification round.
  /// Throws OverlayNotReady when the overlay is not ready yet. Duplicate
  /// events from the same reporter inside the debounce window, or events
  /// while a round is in flight / inside the round interval, do not trigger.
  bool should_trigger_round(const FireEvent& event, bool overlay_ready);

  struct Round {
    std::uint64_t id = 0;
    sim::NodeId reporter;
    sim::SimTime multicast_sent = 0;
    std::set<sim::NodeId> expected;  // members that will reply
    std::map<sim::NodeId, sim::SimTime> replies;
    bool complete = false;
  };

  std::uint64_t begin_round(const sim::NodeId& reporter, sim::SimTime multicast_sent,
                            const std::set<sim::NodeId>& expected_repliers);

  /// Record one member reply; returns the completed round when this was the
  /// last expected reply.
  const Round* record_reply(std::uint64_t round_id, const sim::NodeId& member,
                            const std::vector<RateObservation>& observations,
                            sim::SimTime at);

  /// Merged view for the contour: peer-reported observations plus this
  /// monitor's own notification counts for sensors nobody reported (the
  /// round reporter's host does not reply).
  std::vector<RateObservation> observations(sim::SimTime now,
                                            const std::vector<sim::NodeId>& all_sensors) const;

  std::uint64_t count_in_window(const sim::NodeId& sensor, sim::SimTime now) const;

  const std::map<std::uint64_t, Round>& rounds() const { return rounds_; }
  std::size_t notification_total() const;

private:
  MonitorConfig config_;
  std::map<sim::NodeId, std::vector<sim::SimTime>> notifications_;  // sample times
  std::map<sim::NodeId, sim::SimTime> last_trigger_;                // per reporter
  std::optional<sim::SimTime> last_round_started_;
  std::map<std::uint64_t, Round> rounds_;
  std::map<sim::NodeId, RateObservation> reported_;  // latest reply per sensor
  std::uint64_t next_round_ = 1;
  bool round_in_flight_ = false;
};

}  // namespace vsn::fca

#endif
