#pragma once

#include <cmath>
#include <vector>

namespace probe_mpc {

/// Kinematic bicycle state: planar position, heading, forward speed.
struct AgentState {
  double x = 0.0;      // east position [m]
  double y = 0.0;      // north position [m]
  double theta = 0.0;  // heading [rad]
  double v = 0.0;      // speed [m/s]

  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(theta) &&
           std::isfinite(v);
  }
};

/// Acceleration and steering-rate input.
struct ControlInput {
  double a = 0.0;      // acceleration [m/s^2]
  double omega = 0.0;  // steering rate [rad/s]

  bool finite() const { return std::isfinite(a) && std::isfinite(omega); }
};

struct InputBounds {
  double a_min = -5.0;
  double a_max = 3.0;
  double omega_min = -0.5;
  double omega_max = 0.5;

  ControlInput clamp(const ControlInput& u) const {
    return {std::clamp(u.a, a_min, a_max),
            std::clamp(u.omega, omega_min, omega_max)};
  }
};

struct DynamicsLimits {
  InputBounds input;
  double v_max = 15.0;  // speed clamp keeps the state space bounded
};

/// State sequence of length T+1 sampled at a fixed step.
struct Trajectory {
  std::vector<AgentState> states;
  double dt = 0.1;

  std::size_t length() const { return states.size(); }
  const AgentState& back() const { return states.back(); }
};

}  // namespace probe_mpc
