#pragma once

#include <vector>

#include "probe_mpc/planner.hpp"
#include "probe_mpc/scenario.hpp"

namespace probe_mpc {

/// One vehicle state + applied input at one step. The ego carries id 0;
/// agents are numbered 1..N in config order.
struct VehicleRecord {
  double t = 0.0;
  int id = 0;
  double x = 0.0, y = 0.0, theta = 0.0, v = 0.0;
  double a = 0.0, omega = 0.0;
};

struct EpisodeTrace {
  std::vector<VehicleRecord> vehicles;
  std::vector<StepDiagnostics> planner_steps;
  bool success = false;
  bool collision = false;
  double completion_time = -1.0;  // negative when the episode timed out
  double episode_length = 0.0;
  double dt = 0.1;
  int agent_count = 0;
};

/// Table row: success/collision flags, completion time, gaps at completion,
/// episode-mean velocity and the two jerk statistics.
struct EpisodeMetrics {
  bool success = false;
  bool collision = false;
  double time_to_complete = 0.0;
  double gap_vehicle1 = 0.0;
  double gap_vehicle2 = 0.0;
  double mean_velocity = 0.0;
  double lon_jerk = 0.0;  // mean delta-a / dt of the ego inputs
  double ang_jerk = 0.0;  // mean second difference of omega / dt^2
};

/// Metrics from a completed trace. Throws std::invalid_argument on an empty
/// trace. Gaps are measured at the completion instant (last step when the
/// episode timed out).
EpisodeMetrics compute_metrics(const EpisodeTrace& trace);

/// Runs one closed-loop episode: scripted agents act by reward maximization
/// (with scheduled behavior switches), the ego runs the chosen planner
/// variant. Terminates on success, collision, or timeout.
std::pair<EpisodeMetrics, EpisodeTrace> run_episode(const ScenarioConfig& config,
                                                    Variant variant);

}  // namespace probe_mpc
