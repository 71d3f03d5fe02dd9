#ifndef VSN_VRUNTIME_HPP
#define VSN_VRUNTIME_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "vsn/physnode.hpp"

namespace vsn::vrt {

struct ReportCondition {
  enum class Kind { Always, ThresholdAbove };
  Kind kind = Kind::Always;
  double threshold = 0.0;

  static ReportCondition always() { return {}; }
  static ReportCondition threshold_above(double value) {
    return {Kind::ThresholdAbove, value};
  }
  bool passes(double value) const {
    return kind == Kind::Always || value > threshold;
  }
  bool operator==(const ReportCondition&) const = default;
};

/// Probabilistic per-tick notification gate. The report probability scales
/// with the normalized excess over baseline, so notification counts over a
/// window behave like Poisson samples of lambda_max * severity.
struct NotificationPolicy {
  double lambda_max = 1.0;   // notifications per second at full severity
  double baseline_c = 0.0;   // reading at severity 0
  double full_scale_c = 1.0; // reading excess at severity 1

  bool operator==(const NotificationPolicy&) const = default;
};

struct AppTask {
  std::string task_id;
  std::string app_id;
  std::string quantity = "temperature";
  sim::Duration period = sim::ms(1000);
  int priority = 0;  // lower number = higher priority
  ReportCondition condition;
  std::optional<NotificationPolicy> notification;

  bool operator==(const AppTask&) const = default;
};

enum class VsState { Deployed, Running, Suspended };

struct VirtualSensor {
  std::uint64_t vs_id = 0;
  sim::NodeId host;
  AppTask task;
  VsState state = VsState::Deployed;
  sim::SimTime next_due = 0;
};

struct Emission {
  std::uint64_t vs_id = 0;
  std::string task_id;
  std::string app_id;
  wire::SenMLRecord record;
  bool notification = false;  // produced by a notification-gated task
};

/// Per-node task table and priority scheduler. Driven exclusively by the
/// owning machine; all state changes happen on the sim loop.
class NodeRuntime {
public:
  NodeRuntime(const phys::World* world, sim::NodeId host, std::uint64_t run_seed,
              std::uint64_t* vs_counter);

  /// Creates the virtual sensor; first activation is one period after `now`.
  std::uint64_t deploy_task(const AppTask& task, sim::SimTime now);

  /// Emits samples for every virtual sensor due at `at`, in ascending
  /// (priority, task_id) order; reschedules each at `at + period`.
  std::vector<Emission> tick(sim::SimTime at);

  void set_priority(const std::string& task_id, int priority);    // UnknownTask
  void set_period(const std::string& task_id, sim::Duration period);
  void remove_task(const std::string& task_id);                   // UnknownTask

  std::optional<sim::SimTime> next_activation() const;
  std::size_t task_count() const { return sensors_.size(); }
  const VirtualSensor* find(const std::string& task_id) const;
  const std::map<std::string, VirtualSensor>& sensors() const { return sensors_; }

private:
  const phys::World* world_;
  sim::NodeId host_;
  std::uint64_t run_seed_;
  std::uint64_t* vs_counter_;
  std::map<std::string, VirtualSensor> sensors_;       // keyed by task_id
  std::map<std::string, std::mt19937_64> gate_rng_;    // per-task notification gate
};

}  // namespace vsn::vrt

#endif
