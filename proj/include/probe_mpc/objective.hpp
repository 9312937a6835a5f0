#pragma once

#include <Eigen/Core>
#include <span>

#include "probe_mpc/types.hpp"

namespace probe_mpc {

/// Weights of the planning objective
///   alpha1 * utility - alpha2 * safety_penalty + alpha3 * info.
struct ObjectiveWeights {
  double alpha1 = 0.9;
  double alpha2 = 0.9;
  double alpha3 = 0.1;
  Eigen::Matrix4d Q = Eigen::Vector4d(0.01, 0.01, 0.001, 0.005).asDiagonal();
  Eigen::Matrix2d R = Eigen::Vector2d(0.001, 0.005).asDiagonal();
  double safe_distance = 4.0;  // L
  double beta = 0.02;          // barrier sharpness
  double alpha_risk = 0.1;     // risk sensitivity [1/m]
  double tau = 5.0;            // probing risk threshold

  void validate() const;  // throws std::invalid_argument
};

/// Overflow-safe log(1 + e^x).
double softplus(double x);

/// Tracking reward -sum_t (|x(t)-xref(t)|_Q^2 + |u(t)|_R^2) over t = 1..T.
/// Always <= 0; zero only for perfect tracking with zero input.
double utility(const Trajectory& traj, std::span<const ControlInput> inputs,
               const Trajectory& reference, const Eigen::Matrix4d& Q,
               const Eigen::Matrix2d& R);

/// Risk-scaled safety gap: Mahalanobis distance of the ego position from a
/// predicted mean (w.r.t. the inverse prediction covariance) minus L * risk.
double safety_gap(const Eigen::Vector2d& ego_pos,
                  const Eigen::Vector2d& pred_mean,
                  const Eigen::Matrix2d& pred_cov, double safe_distance,
                  double risk);

/// Soft barrier sum_i log(1 + e^{-beta q_i}); subtracted from the objective.
double safety_penalty(std::span<const double> gaps, double beta);

}  // namespace probe_mpc
