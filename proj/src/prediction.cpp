#include "probe_mpc/prediction.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace probe_mpc {

namespace {

std::vector<Eigen::Matrix2d> growing_covariances(int horizon, double dt,
                                                 const PredictorParams& p) {
  std::vector<Eigen::Matrix2d> covs(horizon);
  for (int t = 1; t <= horizon; ++t) {
    covs[t - 1] =
        (p.cov0 + p.cov_growth * t * dt) * Eigen::Matrix2d::Identity();
  }
  return covs;
}

std::vector<Eigen::Vector2d> constant_velocity_rollout(const AgentState& s,
                                                       int steps, double dt) {
  std::vector<Eigen::Vector2d> out(steps);
  const Eigen::Vector2d pos(s.x, s.y);
  const Eigen::Vector2d vel(s.v * std::cos(s.theta), s.v * std::sin(s.theta));
  for (int t = 1; t <= steps; ++t) {
    out[t - 1] = pos + t * dt * vel;
  }
  return out;
}

/// Advance along a path at the current speed while converging laterally to
/// its centerline; optional constant deceleration.
std::vector<Eigen::Vector2d> lane_follow_rollout(const AgentState& s,
                                                 const Lane& path, int steps,
                                                 double dt, double decel,
                                                 const PredictorParams& p) {
  std::vector<Eigen::Vector2d> out(steps);
  LaneProjection proj = project_polyline(path.centerline, {s.x, s.y});
  double arc = proj.s;
  double lateral = proj.lateral;
  double speed = s.v;
  for (int t = 1; t <= steps; ++t) {
    speed = std::max(0.0, speed - decel * dt);
    arc += speed * dt;
    const double approach =
        std::min(p.lateral_gain * std::abs(lateral), p.lateral_vmax) * dt;
    lateral -= std::copysign(std::min(approach, std::abs(lateral)), lateral);
    const Eigen::Vector2d center = path.point_at(arc);
    const Eigen::Vector2d tangent = path.tangent_at(arc);
    const Eigen::Vector2d normal(-tangent.y(), tangent.x());
    out[t - 1] = center + lateral * normal;
  }
  return out;
}

}  // namespace

std::vector<ModePrediction> predict(const std::vector<AgentState>& history,
                                    const LaneMap& map, int horizon, double dt,
                                    const PredictorParams& params) {
  if (history.size() < 2) {
    throw std::invalid_argument("predict: history needs at least 2 states");
  }
  if (horizon < 1 || !(dt > 0.0)) {
    throw std::invalid_argument("predict: bad horizon or dt");
  }
  const AgentState& current = history.back();
  const Eigen::Vector2d pos(current.x, current.y);
  const auto covs = growing_covariances(horizon, dt, params);

  std::vector<ModePrediction> modes(3);
  for (auto& m : modes) m.cov = covs;

  modes[0].mean = constant_velocity_rollout(current, horizon, dt);

  if (map.off_all_lanes(pos, params.offlane_factor)) {
    // Off-road fallback: constant velocity carries all the mass.
    modes[1].mean = modes[0].mean;
    modes[2].mean = modes[0].mean;
    modes[0].likelihood = 1.0;
    modes[1].likelihood = 0.0;
    modes[2].likelihood = 0.0;
    return modes;
  }

  const LaneProjection on_path = map.project(pos);
  const std::size_t path_idx = static_cast<std::size_t>(on_path.path_index);
  const Lane& current_path = map.path(path_idx);

  // Lateral drift over the scoring window decides the third hypothesis.
  const int window =
      std::min<int>(params.history_window, static_cast<int>(history.size()) - 1);
  const AgentState& past = history[history.size() - 1 - window];
  const LaneProjection past_proj =
      map.project_onto(path_idx, {past.x, past.y});
  const double drift_rate =
      (on_path.lateral - past_proj.lateral) / (window * dt);

  std::optional<std::size_t> target_lane;
  if (!map.is_connector(path_idx) &&
      std::abs(drift_rate) >= params.drift_threshold) {
    const auto adjacent =
        map.adjacent_lane(path_idx, pos, params.adjacent_gap);
    if (adjacent) {
      const LaneProjection adj_proj = map.project_onto(*adjacent, pos);
      // lateral is signed w.r.t. each path; the adjacent lane lies on the
      // side where the agent's offset from it has opposite sign.
      const double side = -adj_proj.lateral;
      if (side * drift_rate > 0.0) target_lane = adjacent;
    }
  }

  modes[1].mean =
      lane_follow_rollout(current, current_path, horizon, dt, 0.0, params);
  if (target_lane) {
    modes[2].mean = lane_follow_rollout(current, map.path(*target_lane),
                                        horizon, dt, 0.0, params);
  } else {
    modes[2].mean = lane_follow_rollout(current, current_path, horizon, dt,
                                        params.brake_decel, params);
  }

  // Score each hypothesis by replaying it from the start of the window and
  // accumulating position residuals against the observed states.
  std::array<double, 3> ssr{0.0, 0.0, 0.0};
  {
    std::array<std::vector<Eigen::Vector2d>, 3> replay;
    replay[0] = constant_velocity_rollout(past, window, dt);
    replay[1] = lane_follow_rollout(past, current_path, window, dt, 0.0, params);
    if (target_lane) {
      replay[2] = lane_follow_rollout(past, map.path(*target_lane), window, dt,
                                      0.0, params);
    } else {
      replay[2] = lane_follow_rollout(past, current_path, window, dt,
                                      params.brake_decel, params);
    }
    for (int h = 0; h < window; ++h) {
      const AgentState& obs = history[history.size() - window + h];
      const Eigen::Vector2d obs_pos(obs.x, obs.y);
      for (int k = 0; k < 3; ++k) {
        ssr[k] += (obs_pos - replay[k][h]).squaredNorm();
      }
    }
  }

  const double inv_two_sigma2 = 1.0 / (2.0 * params.sigma_obs * params.sigma_obs);
  std::array<double, 3> score;
  for (int k = 0; k < 3; ++k) score[k] = -ssr[k] * inv_two_sigma2;
  const double max_score = *std::max_element(score.begin(), score.end());
  double total = 0.0;
  for (int k = 0; k < 3; ++k) {
    score[k] = std::exp(score[k] - max_score);
    total += score[k];
  }
  for (int k = 0; k < 3; ++k) modes[k].likelihood = score[k] / total;
  return modes;
}

EgoDistribution ego_distribution(const Trajectory& reference, double sigma0,
                                 double sigma_rate) {
  if (reference.states.empty()) {
    throw std::invalid_argument("ego_distribution: empty reference");
  }
  EgoDistribution dist;
  dist.dt = reference.dt;
  dist.mean.reserve(reference.states.size());
  dist.cov.reserve(reference.states.size());
  for (std::size_t t = 0; t < reference.states.size(); ++t) {
    dist.mean.emplace_back(reference.states[t].x, reference.states[t].y);
    const double sigma = sigma0 + sigma_rate * static_cast<double>(t) * reference.dt;
    dist.cov.push_back(sigma * sigma * Eigen::Matrix2d::Identity());
  }
  return dist;
}

}  // namespace probe_mpc
