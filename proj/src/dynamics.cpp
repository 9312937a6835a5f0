#include "probe_mpc/dynamics.hpp"

#include <algorithm>
#include <stdexcept>

namespace probe_mpc {

AgentState step(const AgentState& state, const ControlInput& input, double dt,
                const DynamicsLimits& limits) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("dynamics step: dt must be positive");
  }
  if (!state.finite() || !input.finite()) {
    throw std::invalid_argument("dynamics step: non-finite state or input");
  }
  AgentState next;
  next.x = state.x + state.v * std::cos(state.theta) * dt;
  next.y = state.y + state.v * std::sin(state.theta) * dt;
  next.theta = state.theta + input.omega * dt;
  next.v = std::clamp(state.v + input.a * dt, 0.0, limits.v_max);
  return next;
}

Trajectory rollout(const AgentState& state0, std::span<const ControlInput> inputs,
                   double dt, const DynamicsLimits& limits) {
  Trajectory traj;
  traj.dt = dt;
  traj.states.reserve(inputs.size() + 1);
  traj.states.push_back(state0);
  AgentState current = state0;
  for (const ControlInput& u : inputs) {
    current = step(current, u, dt, limits);
    traj.states.push_back(current);
  }
  return traj;
}

}  // namespace probe_mpc
