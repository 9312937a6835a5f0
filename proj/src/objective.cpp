#include <Eigen/LU>
#include "probe_mpc/objective.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <stdexcept>

namespace probe_mpc {

void ObjectiveWeights::validate() const {
  if (!(safe_distance > 0.0) || !(beta > 0.0) || !(tau > 0.0) ||
      !(alpha_risk > 0.0)) {
    throw std::invalid_argument(
        "objective weights: L, beta, tau, alpha_risk must be positive");
  }
  Eigen::LLT<Eigen::Matrix4d> lltq(Q);
  Eigen::LLT<Eigen::Matrix2d> lltr(R);
  if (lltq.info() != Eigen::Success || lltr.info() != Eigen::Success) {
    throw std::invalid_argument("objective weights: Q and R must be SPD");
  }
}

double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double utility(const Trajectory& traj, std::span<const ControlInput> inputs,
               const Trajectory& reference, const Eigen::Matrix4d& Q,
               const Eigen::Matrix2d& R) {
  if (traj.states.size() != reference.states.size() ||
      inputs.size() + 1 != traj.states.size()) {
    throw std::invalid_argument("utility: trajectory/reference/input shape "
                                "mismatch");
  }
  double cost = 0.0;
  for (std::size_t t = 1; t < traj.states.size(); ++t) {
    const AgentState& s = traj.states[t];
    const AgentState& r = reference.states[t];
    const Eigen::Vector4d dx(s.x - r.x, s.y - r.y, s.theta - r.theta,
                             s.v - r.v);
    cost += dx.dot(Q * dx);
    const ControlInput& u = inputs[t - 1];
    const Eigen::Vector2d du(u.a, u.omega);
    cost += du.dot(R * du);
  }
  return -cost;
}

double safety_gap(const Eigen::Vector2d& ego_pos,
                  const Eigen::Vector2d& pred_mean,
                  const Eigen::Matrix2d& pred_cov, double safe_distance,
                  double risk) {
  const double det = pred_cov.determinant();
  if (!(det > 0.0) || !(pred_cov(0, 0) > 0.0)) {
    throw std::domain_error("safety_gap: covariance must be SPD");
  }
  const Eigen::Vector2d d = ego_pos - pred_mean;
  // 2x2 inverse quadratic form written out; this sits on the hot path.
  const double quad = (d.x() * (pred_cov(1, 1) * d.x() - pred_cov(0, 1) * d.y()) +
                       d.y() * (pred_cov(0, 0) * d.y() - pred_cov(1, 0) * d.x())) /
                      det;
  return std::sqrt(std::max(0.0, quad)) - safe_distance * risk;
}

double safety_penalty(std::span<const double> gaps, double beta) {
  if (!(beta > 0.0)) {
    throw std::invalid_argument("safety_penalty: beta must be positive");
  }
  double total = 0.0;
  for (double q : gaps) total += softplus(-beta * q);
  return total;
}

}  // namespace probe_mpc
