#include "probe_mpc/agent_policy.hpp"

#include <algorithm>
#include <cmath>

#include "probe_mpc/dynamics.hpp"

namespace probe_mpc {

namespace {

double policy_reward(const AgentState& self, double a, double omega,
                     const Eigen::Vector3d& phi,
                     const std::vector<AgentState>& neighbors,
                     const Lane& route, double v_bar,
                     const DynamicsLimits& limits,
                     const AgentPolicyParams& params) {
  AgentState state = self;
  const ControlInput input{a, omega};
  double reward = 0.0;
  for (int t = 1; t <= params.horizon; ++t) {
    state = step(state, input, params.dt, limits);
    double spacing = 0.0;
    for (const AgentState& other : neighbors) {
      const double ox = other.x + other.v * std::cos(other.theta) * t * params.dt;
      const double oy = other.y + other.v * std::sin(other.theta) * t * params.dt;
      const double dx = state.x - ox;
      const double dy = state.y - oy;
      spacing += std::min(std::sqrt(dx * dx + dy * dy), params.d_sat);
    }
    const LaneProjection proj =
        project_polyline(route.centerline, {state.x, state.y});
    const Eigen::Vector3d features(-std::abs(state.v - v_bar), spacing,
                                   -proj.distance);
    reward += phi.dot(features) * params.dt;
  }
  return reward;
}

}  // namespace

ControlInput agent_policy(const AgentState& self, const Eigen::Vector3d& phi,
                          const std::vector<AgentState>& neighbors,
                          const Lane& route, double v_bar,
                          const DynamicsLimits& limits,
                          const AgentPolicyParams& params) {
  const InputBounds& bounds = limits.input;
  double a = 0.0;
  double omega = 0.0;
  auto reward_at = [&](double ca, double co) {
    return policy_reward(self, ca, co, phi, neighbors, route, v_bar, limits,
                         params);
  };
  double value = reward_at(a, omega);
  const double h = params.fd_step;
  for (int it = 0; it < params.iterations; ++it) {
    double ga = (reward_at(a + h, omega) - reward_at(a - h, omega)) /
                (2.0 * h);
    double go = (reward_at(a, omega + h) - reward_at(a, omega - h)) /
                (2.0 * h);
    const double norm = std::hypot(ga, go);
    if (norm == 0.0) break;
    // Step along the normalized direction; the reward is piecewise linear
    // in the inputs, so raw gradient magnitudes say little about scale.
    ga /= norm;
    go /= norm;
    bool accepted = false;
    for (double eta = params.initial_step; eta >= params.min_step;
         eta *= 0.5) {
      const double na = std::clamp(a + eta * ga, bounds.a_min, bounds.a_max);
      const double no =
          std::clamp(omega + eta * go, bounds.omega_min, bounds.omega_max);
      const double nv = reward_at(na, no);
      if (nv > value) {
        a = na;
        omega = no;
        value = nv;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  return {a, omega};
}

}  // namespace probe_mpc
