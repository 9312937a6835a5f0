#pragma once

#include <Eigen/Core>
#include <map>
#include <utility>
#include <vector>

#include "probe_mpc/prediction.hpp"

namespace probe_mpc {

/// Principal square root of a 2x2 symmetric positive-definite matrix,
/// computed from the trace/determinant identity
///   sqrt(M) = (M + sqrt(det M) I) / sqrt(tr M + 2 sqrt(det M)),
/// with an eigendecomposition fallback for near-singular denominators.
/// Throws std::domain_error when M is not SPD.
Eigen::Matrix2d spd_sqrt(const Eigen::Matrix2d& m);

/// Closed-form 2-Wasserstein (Bures) distance between two planar Gaussians:
///   W^2 = |m1 - m2|^2 + tr(C1 + C2 - 2 (C1^{1/2} C2 C1^{1/2})^{1/2}).
/// Symmetric, nonnegative, zero iff the parameters coincide.
double wasserstein2_gaussian(const Eigen::Vector2d& mean1,
                             const Eigen::Matrix2d& cov1,
                             const Eigen::Vector2d& mean2,
                             const Eigen::Matrix2d& cov2);

/// Likelihood-weighted proximity risk p (1 + exp(-alpha_risk * w)),
/// bounded in (p, 2p] for finite w.
double mode_risk(double likelihood, double w, double alpha_risk);

/// Per-agent, per-mode, per-step risk values r over t = 1..T.
struct RiskProfile {
  /// (agent id, mode index) -> risk over t = 1..T.
  std::map<std::pair<int, int>, std::vector<double>> values;

  const std::vector<double>& at(int agent, int mode) const;
  double max_over_horizon(int agent, int mode) const;
};

/// Risk of every (agent, mode, step) triple: the ego tube entry at step t
/// against the mode Gaussian at step t. The ego distribution must cover
/// t = 0..T when predictions cover t = 1..T; mismatched horizons throw
/// std::invalid_argument.
RiskProfile build_risk_profile(const EgoDistribution& ego,
                               const PredictionSet& predictions,
                               double alpha_risk);

}  // namespace probe_mpc
