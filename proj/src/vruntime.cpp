#include "vsn/vruntime.hpp"

#include <algorithm>

#include "vsn/errors.hpp"

namespace vsn::vrt {

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

NodeRuntime::NodeRuntime(const phys::World* world, sim::NodeId host, std::uint64_t run_seed,
                         std::uint64_t* vs_counter)
    : world_(world), host_(std::move(host)), run_seed_(run_seed), vs_counter_(vs_counter) {}

std::uint64_t NodeRuntime::deploy_task(const AppTask& task, sim::SimTime now) {
  const phys::PhysicalNode& node = world_->node(host_);
  if (sensors_.count(task.task_id)) fail(ErrorCode::DuplicateTask, task.task_id);
  if (sensors_.size() >= static_cast<std::size_t>(node.max_tasks))
    fail(ErrorCode::CapacityExceeded,
         host_ + " already runs " + std::to_string(sensors_.size()) + " tasks");
  if (task.period == 0) fail(ErrorCode::ConfigInvalid, task.task_id + " period must be > 0");
  if (task.priority < 0) fail(ErrorCode::ConfigInvalid, task.task_id + " priority < 0");

  VirtualSensor vs;
  vs.vs_id = ++*vs_counter_;
  vs.host = host_;
  vs.task = task;
  vs.state = VsState::Deployed;
  vs.next_due = now + task.period;
  sensors_[task.task_id] = vs;
  // Gate draws come from a per-(host, task) stream so one task's schedule
  // never shifts another task's randomness.
  gate_rng_.emplace(task.task_id,
                    std::mt19937_64(run_seed_ ^ fnv1a(host_ + "\x1f" + task.task_id)));
  return vs.vs_id;
}

std::vector<Emission> NodeRuntime::tick(sim::SimTime at) {
  std::vector<VirtualSensor*> due;
  for (auto& [task_id, vs] : sensors_)
    if (vs.next_due <= at) due.push_back(&vs);

  std::sort(due.begin(), due.end(), [](const VirtualSensor* a, const VirtualSensor* b) {
    if (a->task.priority != b->task.priority) return a->task.priority < b->task.priority;
    return a->task.task_id < b->task.task_id;
  });

  std::vector<Emission> out;
  for (VirtualSensor* vs : due) {
    vs->state = VsState::Running;
    vs->next_due = at + vs->task.period;
    wire::SenMLRecord record = world_->sample(host_, vs->task.quantity, at);

    bool emit = vs->task.condition.passes(record.value);
    if (vs->task.notification) {
      // Drawn on every activation, pass or fail, to keep the stream a pure
      // function of this task's own schedule.
      std::uniform_real_distribution<double> uniform(0.0, 1.0);
      double u = uniform(gate_rng_[vs->task.task_id]);
      const NotificationPolicy& policy = *vs->task.notification;
      double severity = (record.value - policy.baseline_c) / policy.full_scale_c;
      severity = std::clamp(severity, 0.0, 1.0);
      double p = std::clamp(
          policy.lambda_max * severity * sim::to_seconds(vs->task.period), 0.0, 1.0);
      emit = emit && u < p;
    }
    if (!emit) continue;

    Emission emission;
    emission.vs_id = vs->vs_id;
    emission.task_id = vs->task.task_id;
    emission.app_id = vs->task.app_id;
    emission.record = record;
    emission.notification = vs->task.notification.has_value();
    out.push_back(std::move(emission));
  }
  return out;
}

void NodeRuntime::set_priority(const std::string& task_id, int priority) {
  auto it = sensors_.find(task_id);
  if (it == sensors_.end()) fail(ErrorCode::UnknownTask, task_id + " on " + host_);
  it->second.task.priority = priority;
}

void NodeRuntime::set_period(const std::string& task_id, sim::Duration period) {
  auto it = sensors_.find(task_id);
  if (it == sensors_.end()) fail(ErrorCode::UnknownTask, task_id + " on " + host_);
  if (period == 0) fail(ErrorCode::ConfigInvalid, task_id + " period must be > 0");
  it->second.task.period = period;
}

void NodeRuntime::remove_task(const std::string& task_id) {
  auto it = sensors_.find(task_id);
  if (it == sensors_.end()) fail(ErrorCode::UnknownTask, task_id + " on " + host_);
  sensors_.erase(it);
  gate_rng_.erase(task_id);
}

std::optional<sim::SimTime> NodeRuntime::next_activation() const {
  std::optional<sim::SimTime> next;
  for (const auto& [task_id, vs] : sensors_)
    if (!next || vs.next_due < *next) next = vs.next_due;
  return next;
}

const VirtualSensor* NodeRuntime::find(const std::string& task_id) const {
  auto it = sensors_.find(task_id);
  return it == sensors_.end() ? nullptr : &it->second;
}

}  // namespace vsn::vrt
