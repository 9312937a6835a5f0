#include <Eigen/LU>
#include "probe_mpc/planner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace probe_mpc {

namespace {

Eigen::VectorXd pack(std::span<const ControlInput> inputs) {
  Eigen::VectorXd x(2 * inputs.size());
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    x(2 * t) = inputs[t].a;
    x(2 * t + 1) = inputs[t].omega;
  }
  return x;
}

std::vector<ControlInput> unpack(const Eigen::VectorXd& x) {
  std::vector<ControlInput> inputs(x.size() / 2);
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    inputs[t] = {x(2 * t), x(2 * t + 1)};
  }
  return inputs;
}

Eigen::VectorXd clamp_controls(const Eigen::VectorXd& x,
                               const InputBounds& bounds) {
  Eigen::VectorXd out = x;
  for (Eigen::Index i = 0; i < out.size(); i += 2) {
    out(i) = std::clamp(out(i), bounds.a_min, bounds.a_max);
    out(i + 1) = std::clamp(out(i + 1), bounds.omega_min, bounds.omega_max);
  }
  return out;
}

}  // namespace

PlanContext::PlanContext(const AgentState& state0, Trajectory reference,
                         const LaneMap* map, std::vector<AgentPlanInput> agents,
                         const RiskProfile& risk, const ObjectiveWeights& weights,
                         const DynamicsLimits& limits, const PlannerParams& params)
    : state0_(state0),
      reference_(std::move(reference)),
      map_(map),
      weights_(weights),
      limits_(limits),
      params_(params),
      risk_(risk) {
  const int horizon = params_.horizon;
  if (static_cast<int>(reference_.states.size()) != horizon + 1) {
    throw std::invalid_argument("plan context: reference length != T + 1");
  }
  for (const AgentPlanInput& agent : agents) {
    PreparedAgent prepared;
    prepared.id = agent.id;
    prepared.belief = agent.belief;
    const int num_modes = static_cast<int>(agent.modes.size());
    prepared.prior_p.resize(num_modes);
    prepared.log_prior.resize(num_modes);
    for (int k = 0; k < num_modes; ++k) {
      const ModePrediction& mode = agent.modes[k];
      if (static_cast<int>(mode.horizon()) != horizon) {
        throw std::invalid_argument("plan context: prediction horizon != T");
      }
      PreparedMode pm;
      pm.mean_x.resize(horizon);
      pm.mean_y.resize(horizon);
      pm.inv00.resize(horizon);
      pm.inv01.resize(horizon);
      pm.inv11.resize(horizon);
      pm.scaled_risk.resize(horizon);
      const std::vector<double>& risk_row = risk_.at(agent.id, k);
      for (int t = 0; t < horizon; ++t) {
        pm.mean_x(t) = mode.mean[t].x();
        pm.mean_y(t) = mode.mean[t].y();
        const Eigen::Matrix2d& c = mode.cov[t];
        const double det = c.determinant();
        if (!(det > 0.0)) {
          throw std::domain_error("plan context: singular prediction cov");
        }
        pm.inv00(t) = c(1, 1) / det;
        pm.inv01(t) = -c(0, 1) / det;
        pm.inv11(t) = c(0, 0) / det;
        pm.scaled_risk(t) = weights_.safe_distance * risk_row[t];
      }
      pm.prior_p = mode.likelihood;
      pm.gated = risk_.max_over_horizon(agent.id, k) > weights_.tau;
      // Ego-independent feature components; passing the mode means as the
      // ego positions zeroes the distance column.
      FeatureTrace trace =
          mode_feature_trace(mode, agent.position, mode.mean, *map_,
                             agent.target_speed, params_.dt, params_.d_sat);
      const Eigen::Vector3d sums = trace.scaled_sum();
      pm.f1 = sums(0);
      pm.f3 = sums(2);
      prepared.prior_p(k) = mode.likelihood;
      prepared.log_prior(k) =
          mode.likelihood > 0.0 ? std::log(mode.likelihood)
                                : -std::numeric_limits<double>::infinity();
      prepared.modes.push_back(std::move(pm));
    }
    agents_.push_back(std::move(prepared));
  }
}

std::pair<double, ObjectiveBreakdown> PlanContext::evaluate(
    std::span<const ControlInput> inputs) const {
  return evaluate_with_gains(inputs, nullptr);
}

std::pair<double, ObjectiveBreakdown> PlanContext::evaluate_with_gains(
    std::span<const ControlInput> inputs,
    std::map<int, std::vector<double>>* gains_out) const {
  const int horizon = params_.horizon;
  if (static_cast<int>(inputs.size()) != horizon) {
    throw std::invalid_argument("evaluate: input length != T");
  }
  const Trajectory traj = rollout(state0_, inputs, params_.dt, limits_);

  ObjectiveBreakdown breakdown;
  breakdown.utility =
      utility(traj, inputs, reference_, weights_.Q, weights_.R);

  Eigen::ArrayXd px(horizon), py(horizon);
  for (int t = 0; t < horizon; ++t) {
    px(t) = traj.states[t + 1].x;
    py(t) = traj.states[t + 1].y;
  }

  double penalty = 0.0;
  double info_total = 0.0;
  for (const PreparedAgent& agent : agents_) {
    const int num_modes = static_cast<int>(agent.modes.size());
    Eigen::Matrix3Xd features(3, num_modes);
    for (int k = 0; k < num_modes; ++k) {
      const PreparedMode& pm = agent.modes[k];
      double f2 = 0.0;
      for (int t = 0; t < horizon; ++t) {
        const double dx = px(t) - pm.mean_x(t);
        const double dy = py(t) - pm.mean_y(t);
        const double quad = dx * (pm.inv00(t) * dx + pm.inv01(t) * dy) +
                            dy * (pm.inv01(t) * dx + pm.inv11(t) * dy);
        const double gap =
            std::sqrt(std::max(0.0, quad)) - pm.scaled_risk(t);
        penalty += softplus(-weights_.beta * gap);
        f2 += std::min(std::sqrt(dx * dx + dy * dy), params_.d_sat);
      }
      features.col(k) =
          Eigen::Vector3d(pm.f1, f2 * params_.dt, pm.f3);
    }

    const bool want_info = weights_.alpha3 != 0.0 || gains_out != nullptr;
    if (!want_info || agent.belief == nullptr || num_modes == 0) continue;
    bool any_open = false;
    for (const PreparedMode& pm : agent.modes) {
      if (!pm.gated && pm.prior_p > 0.0) any_open = true;
    }
    std::vector<double> gains(num_modes, 0.0);
    if (any_open) {
      const BeliefParticles& belief = *agent.belief;
      Eigen::MatrixXd logits = belief.particles() * features;
      logits.rowwise() += agent.log_prior.transpose();
      const Eigen::VectorXd row_max = logits.rowwise().maxCoeff();
      logits.colwise() -= row_max;
      const Eigen::MatrixXd expm = logits.array().exp().matrix();
      const Eigen::VectorXd row_sum = expm.rowwise().sum();
      const Eigen::VectorXd log_row_sum = row_sum.array().log();
      const Eigen::VectorXd& w = belief.weights();
      for (int k = 0; k < num_modes; ++k) {
        const PreparedMode& pm = agent.modes[k];
        if (pm.gated || !(pm.prior_p > 0.0)) continue;
        const double z = w.dot((expm.col(k).array() / row_sum.array()).matrix());
        const double mean_log =
            w.dot((logits.col(k) - log_row_sum));
        gains[k] = std::max(0.0, std::log(std::max(z, 1e-300)) - mean_log);
      }
    }
    double agent_info = 0.0;
    for (double g : gains) agent_info += g;
    agent_info /= static_cast<double>(num_modes);
    info_total += agent_info;
    if (gains_out != nullptr) (*gains_out)[agent.id] = std::move(gains);
  }
  breakdown.safety_penalty = penalty;
  breakdown.info = info_total;
  const double value = weights_.alpha1 * breakdown.utility -
                       weights_.alpha2 * breakdown.safety_penalty +
                       weights_.alpha3 * breakdown.info;
  return {value, breakdown};
}

std::pair<double, ObjectiveBreakdown> evaluate_objective(
    std::span<const ControlInput> inputs, const PlanContext& context) {
  return context.evaluate(inputs);
}

PlanResult plan(const PlanContext& context,
                const std::vector<ControlInput>& warm_start) {
  const PlannerParams& params = context.params();
  const int horizon = params.horizon;
  const InputBounds& bounds = context.limits().input;

  std::vector<ControlInput> seed = warm_start;
  seed.resize(horizon, seed.empty() ? ControlInput{} : seed.back());
  Eigen::VectorXd x = clamp_controls(pack(seed), bounds);

  auto [value, breakdown] = context.evaluate(unpack(x));
  if (!std::isfinite(value)) {
    x.setZero();
    std::tie(value, breakdown) = context.evaluate(unpack(x));
  }

  // The ascent is local; seed it from the best of the warm start and two
  // cheap fallback profiles (coast and brake) so a blocked corridor does
  // not trap the solution in a drive-through basin.
  {
    const std::vector<ControlInput> coast(horizon, ControlInput{0.0, 0.0});
    const std::vector<ControlInput> brake(
        horizon, ControlInput{0.6 * bounds.a_min, 0.0});
    for (const auto& candidate : {coast, brake}) {
      const auto [cv, cb] = context.evaluate(candidate);
      if (cv > value) {
        x = pack(candidate);
        value = cv;
        breakdown = cb;
      }
    }
  }

  PlanResult result;
  result.converged = false;
  int iterations = 0;
  const double h = params.fd_step;
  Eigen::VectorXd gradient(x.size());
  for (int it = 0; it < params.max_iterations; ++it) {
    ++iterations;
    Eigen::VectorXd probe = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      probe(i) = x(i) + h;
      const double fp = context.evaluate(unpack(probe)).first;
      probe(i) = x(i) - h;
      const double fm = context.evaluate(unpack(probe)).first;
      probe(i) = x(i);
      gradient(i) = (fp - fm) / (2.0 * h);
    }
    if (gradient.cwiseAbs().maxCoeff() == 0.0) {
      // Symmetric stationary point: retain the warm start.
      result.converged = true;
      break;
    }
    bool accepted = false;
    double new_value = value;
    ObjectiveBreakdown new_breakdown;
    Eigen::VectorXd candidate;
    for (double eta = params.initial_step; eta >= params.min_step;
         eta *= 0.5) {
      candidate = clamp_controls(x + eta * gradient, bounds);
      auto [cv, cb] = context.evaluate(unpack(candidate));
      if (cv >= value) {
        accepted = true;
        new_value = cv;
        new_breakdown = cb;
        break;
      }
    }
    if (!accepted) {
      result.converged = true;
      break;
    }
    const double delta = new_value - value;
    x = candidate;
    value = new_value;
    breakdown = new_breakdown;
    if (std::abs(delta) < params.convergence_tol) {
      result.converged = true;
      break;
    }
  }

  result.inputs = unpack(x);
  result.trajectory =
      rollout(context.state0(), result.inputs, params.dt, context.limits());
  result.objective_value = value;
  result.breakdown = breakdown;
  result.iterations = iterations;
  return result;
}

Trajectory build_reference(const AgentState& ego, const LaneMap& map,
                           std::size_t target_lane, double target_speed,
                           const PlannerParams& params) {
  const Lane& lane = map.path(target_lane);
  const LaneProjection proj =
      map.project_onto(target_lane, {ego.x, ego.y});
  Trajectory ref;
  ref.dt = params.dt;
  ref.states.reserve(params.horizon + 1);
  ref.states.push_back(ego);
  double s = proj.s;
  double lateral = proj.lateral;
  for (int t = 1; t <= params.horizon; ++t) {
    s += target_speed * params.dt;
    const double approach =
        std::min(params.ref_lateral_gain * std::abs(lateral),
                 params.ref_lateral_vmax) *
        params.dt;
    lateral -= std::copysign(std::min(approach, std::abs(lateral)), lateral);
    const Eigen::Vector2d center = lane.point_at(s);
    const Eigen::Vector2d tangent = lane.tangent_at(s);
    const Eigen::Vector2d normal(-tangent.y(), tangent.x());
    const Eigen::Vector2d pos = center + lateral * normal;
    AgentState state;
    state.x = pos.x();
    state.y = pos.y();
    state.theta = std::atan2(tangent.y(), tangent.x());
    state.v = target_speed;
    ref.states.push_back(state);
  }
  return ref;
}

MpcPlanner::MpcPlanner(const LaneMap& map, PlannerSetup setup)
    : map_(map), setup_(std::move(setup)), rng_(setup_.seed) {}

const BeliefParticles* MpcPlanner::belief(int agent_id) const {
  const auto it = beliefs_.find(agent_id);
  return it == beliefs_.end() ? nullptr : &it->second;
}

std::pair<ControlInput, PlanResult> MpcPlanner::mpc_step(
    const WorldSnapshot& world) {
  const bool advanced = world.time > last_time_;
  if (!advanced && has_cached_result_) {
    // Re-planning the same instant: the solve is a pure function of the
    // internal state, so return the recorded solution.
    return {cached_result_.inputs.front(), cached_result_};
  }
  if (advanced) {
    for (const TrackedAgent& agent : world.agents) {
      auto& history = histories_[agent.id];
      history.push_back(agent.state);
      const std::size_t keep =
          static_cast<std::size_t>(setup_.predictor.history_window) + 2;
      if (history.size() > keep) {
        history.erase(history.begin(), history.end() - keep);
      }
    }
    last_time_ = world.time;
  }

  PredictionSet predictions;
  std::vector<AgentPlanInput> agent_inputs;
  for (const TrackedAgent& agent : world.agents) {
    std::vector<AgentState> history = histories_[agent.id];
    if (history.empty()) history.push_back(agent.state);
    if (history.size() < 2) {
      // Cold start: back-extrapolate one state so the predictor can score.
      AgentState prev = history.front();
      prev.x -= prev.v * std::cos(prev.theta) * setup_.params.dt;
      prev.y -= prev.v * std::sin(prev.theta) * setup_.params.dt;
      history.insert(history.begin(), prev);
    }
    std::vector<ModePrediction> modes =
        predict(history, map_, setup_.params.horizon, setup_.params.dt,
                setup_.predictor);
    predictions[agent.id] = modes;

    if (beliefs_.find(agent.id) == beliefs_.end()) {
      beliefs_.emplace(
          agent.id,
          BeliefParticles::from_prior(
              setup_.belief_prior_mean,
              setup_.belief_prior_var * Eigen::Matrix3d::Identity(),
              setup_.belief_particles, rng_));
    }
    AgentPlanInput input;
    input.id = agent.id;
    input.position = {agent.state.x, agent.state.y};
    input.target_speed = agent.target_speed;
    input.modes = std::move(modes);
    input.belief = &beliefs_.at(agent.id);
    agent_inputs.push_back(std::move(input));
  }

  Trajectory reference = build_reference(
      world.ego, map_, setup_.target_lane, setup_.target_speed, setup_.params);
  const EgoDistribution ego_dist = ego_distribution(
      reference, setup_.predictor.sigma0, setup_.predictor.sigma_rate);
  const RiskProfile risk =
      build_risk_profile(ego_dist, predictions, setup_.weights.alpha_risk);

  PlanContext context(world.ego, std::move(reference), &map_,
                      std::move(agent_inputs), risk, setup_.weights,
                      setup_.limits, setup_.params);

  std::vector<ControlInput> warm = previous_solution_;
  if (advanced && !warm.empty()) {
    warm.erase(warm.begin());
    warm.push_back(warm.empty() ? ControlInput{} : warm.back());
  }
  PlanResult result = plan(context, warm);
  previous_solution_ = result.inputs;
  cached_result_ = result;
  has_cached_result_ = true;

  // Record the prediction context for later observation assimilation.
  if (advanced || assim_buffer_.empty()) {
    AssimRecord record;
    record.time = world.time;
    std::vector<Eigen::Vector2d> planned(setup_.params.horizon);
    for (int t = 0; t < setup_.params.horizon; ++t) {
      planned[t] = {result.trajectory.states[t + 1].x,
                    result.trajectory.states[t + 1].y};
    }
    for (const TrackedAgent& agent : world.agents) {
      const auto& modes = predictions.at(agent.id);
      Eigen::Matrix3Xd sums(3, static_cast<Eigen::Index>(modes.size()));
      Eigen::VectorXd prior(static_cast<Eigen::Index>(modes.size()));
      for (std::size_t k = 0; k < modes.size(); ++k) {
        const FeatureTrace trace = mode_feature_trace(
            modes[k], {agent.state.x, agent.state.y}, planned, map_,
            agent.target_speed, setup_.params.dt, setup_.params.d_sat);
        sums.col(static_cast<Eigen::Index>(k)) = trace.scaled_sum();
        prior(static_cast<Eigen::Index>(k)) = modes[k].likelihood;
      }
      record.modes[agent.id] = modes;
      record.feature_sums[agent.id] = std::move(sums);
      record.prior_p[agent.id] = std::move(prior);
    }
    assim_buffer_.push_back(std::move(record));
    while (assim_buffer_.size() >
           static_cast<std::size_t>(setup_.assimilation.lookahead) + 1) {
      assim_buffer_.pop_front();
    }
  }

  diagnostics_ = StepDiagnostics{};
  diagnostics_.time = world.time;
  diagnostics_.objective_value = result.objective_value;
  diagnostics_.breakdown = result.breakdown;
  diagnostics_.iterations = result.iterations;
  diagnostics_.converged = result.converged;
  std::map<int, std::vector<double>> gains;
  context.evaluate_with_gains(result.inputs, &gains);
  diagnostics_.info_gains = std::move(gains);
  for (const auto& [agent_id, modes] : predictions) {
    std::vector<double> maxima(modes.size());
    for (std::size_t k = 0; k < modes.size(); ++k) {
      maxima[k] = risk.max_over_horizon(agent_id, static_cast<int>(k));
    }
    diagnostics_.risk_max[agent_id] = std::move(maxima);
    diagnostics_.belief_means[agent_id] = beliefs_.at(agent_id).mean();
  }

  return {result.inputs.front(), std::move(result)};
}

void MpcPlanner::observe(const WorldSnapshot& world) {
  const double dt = setup_.params.dt;
  const int lookahead = setup_.assimilation.lookahead;
  for (const AssimRecord& record : assim_buffer_) {
    const int age =
        static_cast<int>(std::lround((world.time - record.time) / dt));
    if (age != lookahead) continue;
    for (const TrackedAgent& agent : world.agents) {
      const auto modes_it = record.modes.find(agent.id);
      if (modes_it == record.modes.end()) continue;
      auto belief_it = beliefs_.find(agent.id);
      if (belief_it == beliefs_.end()) continue;
      belief_update_observed(
          belief_it->second, {agent.state.x, agent.state.y}, modes_it->second,
          record.feature_sums.at(agent.id), record.prior_p.at(agent.id), rng_,
          setup_.assimilation);
    }
  }
  while (!assim_buffer_.empty()) {
    const int age = static_cast<int>(
        std::lround((world.time - assim_buffer_.front().time) / dt));
    if (age < lookahead) break;
    assim_buffer_.pop_front();
  }
}

}  // namespace probe_mpc
