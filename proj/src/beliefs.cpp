#include <Eigen/LU>
#include "probe_mpc/beliefs.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace probe_mpc {

Eigen::Vector3d FeatureTrace::scaled_sum() const {
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (const auto& f : features) sum += f;
  return sum * dt;
}

double agent_reward(const FeatureTrace& trace, const Eigen::Vector3d& phi) {
  return phi.dot(trace.scaled_sum());
}

std::vector<double> boltzmann_likelihoods(std::span<const double> rewards,
                                          std::span<const double> prior) {
  if (rewards.size() != prior.size() || rewards.empty()) {
    throw std::invalid_argument("boltzmann_likelihoods: size mismatch");
  }
  double max_exponent = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < rewards.size(); ++k) {
    if (prior[k] > 0.0) {
      max_exponent = std::max(max_exponent, std::log(prior[k]) + rewards[k]);
    }
  }
  if (!std::isfinite(max_exponent)) {
    throw std::invalid_argument("boltzmann_likelihoods: degenerate prior");
  }
  std::vector<double> out(rewards.size(), 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k < rewards.size(); ++k) {
    if (prior[k] > 0.0) {
      out[k] = std::exp(std::log(prior[k]) + rewards[k] - max_exponent);
      total += out[k];
    }
  }
  for (double& p : out) p /= total;
  return out;
}

BeliefParticles BeliefParticles::from_prior(const Eigen::Vector3d& mean,
                                            const Eigen::Matrix3d& cov,
                                            int count, std::mt19937_64& rng) {
  if (count < 100) {
    throw std::invalid_argument("belief: at least 100 particles required");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() < -1e-12) {
    throw std::invalid_argument("belief: prior covariance must be PSD");
  }
  const Eigen::Matrix3d root =
      es.eigenvectors() *
      es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
      es.eigenvectors().transpose();

  BeliefParticles belief;
  belief.prior_mean_ = mean;
  belief.prior_cov_ = cov;
  belief.particles_.resize(count, 3);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int m = 0; m < count; ++m) {
    const Eigen::Vector3d z(normal(rng), normal(rng), normal(rng));
    belief.particles_.row(m) = (mean + root * z).cwiseMax(0.0).transpose();
  }
  belief.weights_ = Eigen::VectorXd::Constant(count, 1.0 / count);
  return belief;
}

Eigen::Vector3d BeliefParticles::mean() const {
  return particles_.transpose() * weights_;
}

double BeliefParticles::effective_sample_size() const {
  return 1.0 / weights_.squaredNorm();
}

void BeliefParticles::reweight(const Eigen::VectorXd& likelihood) {
  if (likelihood.size() != weights_.size()) {
    throw std::invalid_argument("belief reweight: size mismatch");
  }
  Eigen::VectorXd updated = weights_.cwiseProduct(likelihood.cwiseMax(0.0));
  const double total = updated.sum();
  if (!(total > 1e-300) || !std::isfinite(total)) {
    weights_.setConstant(1.0 / count());
    underflow_reset_ = true;
    return;
  }
  weights_ = updated / total;
}

void BeliefParticles::resample_systematic(std::mt19937_64& rng,
                                          double jitter_var) {
  const int m_count = count();
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double start = uniform(rng) / m_count;
  Eigen::Matrix<double, Eigen::Dynamic, 3> resampled(m_count, 3);
  double cumulative = weights_(0);
  int src = 0;
  std::normal_distribution<double> normal(0.0, std::sqrt(jitter_var));
  for (int m = 0; m < m_count; ++m) {
    const double u = start + static_cast<double>(m) / m_count;
    while (cumulative < u && src + 1 < m_count) {
      ++src;
      cumulative += weights_(src);
    }
    Eigen::Vector3d p = particles_.row(src).transpose();
    p += Eigen::Vector3d(normal(rng), normal(rng), normal(rng));
    resampled.row(m) = p.cwiseMax(0.0).transpose();
  }
  particles_ = std::move(resampled);
  weights_.setConstant(1.0 / m_count);
}

void BeliefParticles::set_particles(
    const Eigen::Matrix<double, Eigen::Dynamic, 3>& p,
    const Eigen::VectorXd& w) {
  if (p.rows() != w.size() || p.rows() < 1) {
    throw std::invalid_argument("belief: particle/weight size mismatch");
  }
  particles_ = p;
  weights_ = w / w.sum();
}

Eigen::MatrixXd mode_likelihoods_per_particle(
    const BeliefParticles& belief, const Eigen::Matrix3Xd& feature_sums,
    const Eigen::VectorXd& prior_p) {
  const int modes = static_cast<int>(feature_sums.cols());
  if (prior_p.size() != modes || modes < 1) {
    throw std::invalid_argument("mode likelihoods: prior/feature mismatch");
  }
  // log p_hat(m, k) = log p_k + phi_m . F_k - logsumexp_j(...)
  Eigen::MatrixXd logits = belief.particles() * feature_sums;  // M x K
  Eigen::RowVectorXd log_prior(modes);
  for (int k = 0; k < modes; ++k) {
    log_prior(k) = prior_p(k) > 0.0 ? std::log(prior_p(k))
                                    : -std::numeric_limits<double>::infinity();
  }
  logits.rowwise() += log_prior;
  const Eigen::VectorXd row_max = logits.rowwise().maxCoeff();
  logits.colwise() -= row_max;
  Eigen::MatrixXd p_hat = logits.array().exp().matrix();
  const Eigen::VectorXd row_sum = p_hat.rowwise().sum();
  p_hat.array().colwise() /= row_sum.array();
  return p_hat;
}

BeliefParticles hypothetical_posterior(const BeliefParticles& belief,
                                       const Eigen::VectorXd& mode_likelihood) {
  BeliefParticles posterior = belief;
  posterior.reweight(mode_likelihood);
  return posterior;
}

double kl_divergence(const BeliefParticles& prior,
                     const BeliefParticles& posterior) {
  if (prior.count() != posterior.count()) {
    throw std::invalid_argument("kl_divergence: particle counts differ");
  }
  double kl = 0.0;
  for (int m = 0; m < prior.count(); ++m) {
    const double w = prior.weights()(m);
    if (w <= 0.0) continue;
    const double wp = std::max(posterior.weights()(m), 1e-300);
    kl += w * std::log(w / wp);
  }
  return std::max(0.0, kl);
}

double info_gain(const BeliefParticles& prior, const BeliefParticles& posterior,
                 double max_risk_over_horizon, double tau) {
  if (max_risk_over_horizon > tau) return 0.0;
  return kl_divergence(prior, posterior);
}

double total_info(std::span<const double> gains) {
  if (gains.empty()) {
    throw std::invalid_argument("total_info: no gains");
  }
  double sum = 0.0;
  for (double g : gains) sum += g;
  return sum / static_cast<double>(gains.size());
}

FeatureTrace mode_feature_trace(const ModePrediction& mode,
                                const Eigen::Vector2d& agent_pos,
                                std::span<const Eigen::Vector2d> ego_positions,
                                const LaneMap& map, double v_bar, double dt,
                                double d_sat) {
  if (ego_positions.size() != mode.horizon()) {
    throw std::invalid_argument("mode_feature_trace: horizon mismatch");
  }
  FeatureTrace trace;
  trace.dt = dt;
  trace.features.resize(mode.horizon());
  Eigen::Vector2d prev = agent_pos;
  for (std::size_t t = 0; t < mode.horizon(); ++t) {
    const Eigen::Vector2d& pos = mode.mean[t];
    const double speed = (pos - prev).norm() / dt;
    const double ego_dist = std::min((pos - ego_positions[t]).norm(), d_sat);
    const double lane_offset = map.project(pos).distance;
    trace.features[t] =
        Eigen::Vector3d(-std::abs(speed - v_bar), ego_dist, -lane_offset);
    prev = pos;
  }
  return trace;
}

int belief_update_observed(BeliefParticles& belief,
                           const Eigen::Vector2d& observed_pos,
                           const std::vector<ModePrediction>& modes_prev,
                           const Eigen::Matrix3Xd& feature_sums_prev,
                           const Eigen::VectorXd& prior_p_prev,
                           std::mt19937_64& rng,
                           const BeliefUpdateParams& params) {
  if (modes_prev.empty()) {
    throw std::invalid_argument("belief update: no previous modes");
  }
  const int step =
      std::min<int>(params.lookahead, static_cast<int>(modes_prev[0].horizon()));
  // Nearest mode by position Mahalanobis at the lookahead step.
  int associated = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < modes_prev.size(); ++k) {
    const Eigen::Vector2d d = observed_pos - modes_prev[k].mean[step - 1];
    const Eigen::Matrix2d& c = modes_prev[k].cov[step - 1];
    const double det = c.determinant();
    const double maha2 =
        (d.x() * (c(1, 1) * d.x() - c(0, 1) * d.y()) +
         d.y() * (c(0, 0) * d.y() - c(1, 0) * d.x())) /
        det;
    if (maha2 < best) {
      best = maha2;
      associated = static_cast<int>(k);
    }
  }
  const Eigen::MatrixXd p_hat =
      mode_likelihoods_per_particle(belief, feature_sums_prev, prior_p_prev);
  belief.reweight(p_hat.col(associated));
  if (belief.effective_sample_size() <
      params.ess_ratio * static_cast<double>(belief.count())) {
    belief.resample_systematic(rng, params.jitter_var);
  }
  return associated;
}

}  // namespace probe_mpc
