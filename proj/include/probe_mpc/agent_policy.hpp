#pragma once

#include <Eigen/Core>
#include <vector>

#include "probe_mpc/lane_map.hpp"
#include "probe_mpc/types.hpp"

namespace probe_mpc {

struct AgentPolicyParams {
  int horizon = 20;      // rollout steps
  double dt = 0.1;
  double d_sat = 10.0;   // neighbor distance saturation [m]
  int iterations = 15;
  double fd_step = 1e-3;
  double initial_step = 1.0;
  double min_step = 1e-3;
};

/// Reward-maximizing scripted agent: picks a constant (a, omega) held over a
/// short horizon by projected gradient ascent on
///   sum_t phi . [ -|v - v_bar|, sum_{j!=i} min(d_j, d_sat), -|lane offset| ] dt
/// with neighbors extrapolated at constant velocity. Deterministic.
ControlInput agent_policy(const AgentState& self, const Eigen::Vector3d& phi,
                          const std::vector<AgentState>& neighbors,
                          const Lane& route, double v_bar,
                          const DynamicsLimits& limits,
                          const AgentPolicyParams& params = {});

}  // namespace probe_mpc
