#pragma once

#include <Eigen/Core>
#include <random>
#include <span>
#include <vector>

#include "probe_mpc/lane_map.hpp"
#include "probe_mpc/prediction.hpp"

namespace probe_mpc {

/// Behavior parameter vector phi: nonnegative weights on velocity matching,
/// safety distance, and lane keeping.
struct BehaviorParams {
  Eigen::Vector3d phi = Eigen::Vector3d::Zero();
};

/// Per-step reward features J(t) for a candidate agent trajectory, with the
/// convention that larger is preferred:
///   [ -|v - v_bar|, min(distance to ego, d_sat), -|lane offset| ].
struct FeatureTrace {
  std::vector<Eigen::Vector3d> features;
  double dt = 0.1;

  /// dt-scaled feature sum, so reward magnitudes do not scale with the
  /// number of horizon steps.
  Eigen::Vector3d scaled_sum() const;
};

/// Reward sum_t phi^T J(t) dt for one candidate trajectory.
double agent_reward(const FeatureTrace& trace, const Eigen::Vector3d& phi);

/// Modified Boltzmann mode likelihoods p_k e^{R_k} / sum_j p_j e^{R_j},
/// evaluated with max-subtraction. Throws std::invalid_argument when every
/// prior is zero.
std::vector<double> boltzmann_likelihoods(std::span<const double> rewards,
                                          std::span<const double> prior);

/// Weighted particle belief over behavior parameters.
class BeliefParticles {
 public:
  BeliefParticles() = default;

  /// Samples M particles from N(mean, cov) with components clamped to >= 0.
  static BeliefParticles from_prior(const Eigen::Vector3d& mean,
                                    const Eigen::Matrix3d& cov, int count,
                                    std::mt19937_64& rng);

  int count() const { return static_cast<int>(particles_.rows()); }
  const Eigen::Matrix<double, Eigen::Dynamic, 3>& particles() const {
    return particles_;
  }
  const Eigen::VectorXd& weights() const { return weights_; }
  const Eigen::Vector3d& prior_mean() const { return prior_mean_; }
  const Eigen::Matrix3d& prior_cov() const { return prior_cov_; }
  bool underflow_reset() const { return underflow_reset_; }

  Eigen::Vector3d mean() const;
  double effective_sample_size() const;

  /// Multiply weights by a per-particle likelihood and renormalize. A total
  /// weight underflow resets to uniform and sets the underflow flag.
  void reweight(const Eigen::VectorXd& likelihood);

  /// Systematic resampling with N(0, jitter_var I) jitter, components
  /// clamped to >= 0. Weights become uniform.
  void resample_systematic(std::mt19937_64& rng, double jitter_var);

  void set_particles(const Eigen::Matrix<double, Eigen::Dynamic, 3>& p,
                     const Eigen::VectorXd& w);

 private:
  Eigen::Matrix<double, Eigen::Dynamic, 3> particles_;
  Eigen::VectorXd weights_;
  Eigen::Vector3d prior_mean_ = Eigen::Vector3d::Constant(1.0 / 3.0);
  Eigen::Matrix3d prior_cov_ = 0.05 * Eigen::Matrix3d::Identity();
  bool underflow_reset_ = false;
};

/// Per-particle modified-Boltzmann likelihood of each mode.
/// feature_sums has one dt-scaled feature column per mode (3 x K); prior_p
/// holds the predictor likelihoods. Returns an M x K matrix whose rows sum
/// to 1.
Eigen::MatrixXd mode_likelihoods_per_particle(
    const BeliefParticles& belief, const Eigen::Matrix3Xd& feature_sums,
    const Eigen::VectorXd& prior_p);

/// Bayes update of the belief by one mode's per-particle likelihood.
BeliefParticles hypothetical_posterior(const BeliefParticles& belief,
                                       const Eigen::VectorXd& mode_likelihood);

/// Discrete KL divergence sum_m w_m log(w_m / w'_m) between a belief and a
/// reweighted copy sharing its particle support. Nonnegative.
double kl_divergence(const BeliefParticles& prior,
                     const BeliefParticles& posterior);

/// KL information gain for one mode, gated to exactly zero when the mode's
/// maximal risk over the horizon exceeds tau.
double info_gain(const BeliefParticles& prior, const BeliefParticles& posterior,
                 double max_risk_over_horizon, double tau);

/// Mean of the per-mode gains (the per-agent total).
double total_info(std::span<const double> gains);

/// Reward features of one predicted mode against candidate ego positions.
/// `agent_pos` anchors the speed estimate of the first prediction step;
/// `ego_positions` must cover t = 1..T (same horizon as the mode).
FeatureTrace mode_feature_trace(const ModePrediction& mode,
                                const Eigen::Vector2d& agent_pos,
                                std::span<const Eigen::Vector2d> ego_positions,
                                const LaneMap& map, double v_bar, double dt,
                                double d_sat = 10.0);

struct BeliefUpdateParams {
  int lookahead = 5;        // steps between prediction time and observation
  double ess_ratio = 0.5;   // resample when ESS < ratio * M
  double jitter_var = 1e-4; // resampling jitter variance
};

/// Assimilates one observed agent position: associates it to the nearest
/// mode of `modes_prev` (position Mahalanobis at the lookahead step),
/// reweights every particle by that mode's modified-Boltzmann likelihood,
/// renormalizes, and resamples when the effective sample size drops below
/// ess_ratio * M. Returns the associated mode index.
int belief_update_observed(BeliefParticles& belief,
                           const Eigen::Vector2d& observed_pos,
                           const std::vector<ModePrediction>& modes_prev,
                           const Eigen::Matrix3Xd& feature_sums_prev,
                           const Eigen::VectorXd& prior_p_prev,
                           std::mt19937_64& rng,
                           const BeliefUpdateParams& params = {});

}  // namespace probe_mpc
