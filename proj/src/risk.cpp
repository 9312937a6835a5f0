#include "probe_mpc/risk.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace probe_mpc {

namespace {

void require_spd(const Eigen::Matrix2d& m) {
  const double asym = std::abs(m(0, 1) - m(1, 0));
  const double scale = m.cwiseAbs().maxCoeff();
  if (asym > 1e-8 * std::max(1.0, scale)) {
    throw std::domain_error("covariance is not symmetric");
  }
  const double det = m.determinant();
  if (!(m(0, 0) > 0.0) || !(det > 0.0)) {
    throw std::domain_error("covariance is not positive definite");
  }
}

}  // namespace

Eigen::Matrix2d spd_sqrt(const Eigen::Matrix2d& m) {
  require_spd(m);
  const double det = m.determinant();
  const double sqrt_det = std::sqrt(det);
  const double denom2 = m.trace() + 2.0 * sqrt_det;
  if (denom2 > 1e-12) {
    return (m + sqrt_det * Eigen::Matrix2d::Identity()) / std::sqrt(denom2);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(m);
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() < 0.0) {
    throw std::domain_error("spd_sqrt: eigendecomposition failed");
  }
  return es.operatorSqrt();
}

double wasserstein2_gaussian(const Eigen::Vector2d& mean1,
                             const Eigen::Matrix2d& cov1,
                             const Eigen::Vector2d& mean2,
                             const Eigen::Matrix2d& cov2) {
  require_spd(cov1);
  require_spd(cov2);
  if (mean1 == mean2 && cov1 == cov2) return 0.0;
  const Eigen::Matrix2d root1 = spd_sqrt(cov1);
  const Eigen::Matrix2d cross = spd_sqrt(root1 * cov2 * root1);
  const double bures =
      (cov1 + cov2 - 2.0 * cross).trace();
  const double w2 = (mean1 - mean2).squaredNorm() + std::max(0.0, bures);
  return std::sqrt(w2);
}

double mode_risk(double likelihood, double w, double alpha_risk) {
  if (likelihood < 0.0 || likelihood > 1.0) {
    throw std::domain_error("mode_risk: likelihood outside [0, 1]");
  }
  if (w < 0.0 || !(alpha_risk > 0.0)) {
    throw std::domain_error("mode_risk: bad distance or sensitivity");
  }
  return likelihood * (1.0 + std::exp(-alpha_risk * w));
}

const std::vector<double>& RiskProfile::at(int agent, int mode) const {
  const auto it = values.find({agent, mode});
  if (it == values.end()) {
    throw std::out_of_range("risk profile: unknown (agent, mode)");
  }
  return it->second;
}

double RiskProfile::max_over_horizon(int agent, int mode) const {
  const auto& r = at(agent, mode);
  double top = 0.0;
  for (double v : r) top = std::max(top, v);
  return top;
}

RiskProfile build_risk_profile(const EgoDistribution& ego,
                               const PredictionSet& predictions,
                               double alpha_risk) {
  RiskProfile profile;
  for (const auto& [agent_id, modes] : predictions) {
    for (std::size_t k = 0; k < modes.size(); ++k) {
      const ModePrediction& mode = modes[k];
      if (mode.horizon() + 1 != ego.length()) {
        throw std::invalid_argument(
            "build_risk_profile: prediction horizon does not match ego "
            "distribution");
      }
      std::vector<double> r(mode.horizon());
      for (std::size_t t = 0; t < mode.horizon(); ++t) {
        const double w = wasserstein2_gaussian(ego.mean[t + 1], ego.cov[t + 1],
                                               mode.mean[t], mode.cov[t]);
        r[t] = mode_risk(mode.likelihood, w, alpha_risk);
      }
      profile.values.emplace(std::make_pair(agent_id, static_cast<int>(k)),
                             std::move(r));
    }
  }
  return profile;
}

}  // namespace probe_mpc
