#pragma once

#include <span>

#include "probe_mpc/types.hpp"

namespace probe_mpc {

/// One Euler step of the kinematic bicycle model.
///
///   x' = x + v cos(theta) dt
///   y' = y + v sin(theta) dt
///   theta' = theta + omega dt
///   v' = clamp(v + a dt, 0, v_max)
///
/// Throws std::invalid_argument on non-finite state or input fields.
AgentState step(const AgentState& state, const ControlInput& input, double dt,
                const DynamicsLimits& limits = {});

/// Repeated `step` over an input sequence; result has inputs.size() + 1
/// states with the initial state first.
Trajectory rollout(const AgentState& state0, std::span<const ControlInput> inputs,
                   double dt, const DynamicsLimits& limits = {});

}  // namespace probe_mpc
