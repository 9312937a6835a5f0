#pragma once

#include <Eigen/Core>
#include <map>
#include <vector>

#include "probe_mpc/lane_map.hpp"
#include "probe_mpc/types.hpp"

namespace probe_mpc {

/// One predicted motion mode: position means and covariances over the
/// horizon (t = 1..T) plus the mixture likelihood.
struct ModePrediction {
  std::vector<Eigen::Vector2d> mean;
  std::vector<Eigen::Matrix2d> cov;
  double likelihood = 0.0;

  std::size_t horizon() const { return mean.size(); }
};

/// agent id -> K mode predictions, likelihoods summing to 1 per agent.
using PredictionSet = std::map<int, std::vector<ModePrediction>>;

/// Gaussian tube around the ego reference: mean positions with isotropic
/// covariance (sigma0 + sigma_rate * t * dt)^2 I, t = 0..T.
struct EgoDistribution {
  std::vector<Eigen::Vector2d> mean;
  std::vector<Eigen::Matrix2d> cov;
  double dt = 0.1;

  std::size_t length() const { return mean.size(); }
};

struct PredictorParams {
  double cov0 = 0.1;         // initial position covariance [m^2]
  double cov_growth = 0.3;   // covariance trace growth rate [m^2/s]
  double sigma_obs = 0.3;    // residual model std for mode scoring [m]
  int history_window = 5;    // scoring window H (steps)
  double sigma0 = 0.25;      // ego tube std at t=0 [m]
  double sigma_rate = 0.1;   // ego tube std growth [m/s]
  double brake_decel = 2.0;  // braking-mode deceleration [m/s^2]
  double drift_threshold = 0.2;  // lateral speed that flags a lane change [m/s]
  double lateral_gain = 1.0;     // lane-snap convergence rate [1/s]
  double lateral_vmax = 0.5;     // lane-snap lateral speed cap [m/s]
  double offlane_factor = 1.5;   // off-road threshold in lane widths
  double adjacent_gap = 7.0;     // max centerline gap for adjacency [m]
};

/// Mode identities in the order `predict` emits them.
enum class ModeKind { kConstantVelocity = 0, kLaneKeep = 1, kManeuver = 2 };

/// Three-mode Gaussian prediction for one agent.
///
/// Modes: (1) constant velocity-vector extrapolation, (2) snap to the
/// current lane centerline at current speed, (3) snap to the adjacent lane
/// the agent is drifting toward, or brake in lane when no adjacent lane is
/// being targeted. Likelihoods come from softmax-scored one-step-ahead
/// residuals of each hypothesis over the recent history window.
///
/// Throws std::invalid_argument when history has fewer than 2 states.
/// An agent off every mapped lane falls back to the constant-velocity mode
/// with likelihood 1 plus two zero-likelihood duplicates.
std::vector<ModePrediction> predict(const std::vector<AgentState>& history,
                                    const LaneMap& map, int horizon, double dt,
                                    const PredictorParams& params = {});

EgoDistribution ego_distribution(const Trajectory& reference, double sigma0,
                                 double sigma_rate);

}  // namespace probe_mpc
