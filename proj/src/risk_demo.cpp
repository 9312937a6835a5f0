#include "probe_mpc/risk_demo.hpp"

namespace probe_mpc {

namespace {

ModePrediction straight_mode(const Eigen::Vector2d& start,
                             const Eigen::Vector2d& velocity, double likelihood,
                             int horizon, double dt) {
  ModePrediction mode;
  mode.likelihood = likelihood;
  mode.mean.resize(horizon);
  mode.cov.resize(horizon);
  for (int t = 1; t <= horizon; ++t) {
    mode.mean[t - 1] = start + t * dt * velocity;
    mode.cov[t - 1] = (0.1 + 0.3 * t * dt) * Eigen::Matrix2d::Identity();
  }
  return mode;
}

}  // namespace

RiskDemoResult run_risk_demo(double alpha_risk) {
  RiskDemoResult demo;
  const int horizon = demo.horizon;
  const double dt = 0.1;

  Trajectory reference;
  reference.dt = dt;
  for (int t = 0; t <= horizon; ++t) {
    reference.states.push_back({0.5 * t, 0.0, 0.0, 5.0});
  }
  demo.ego = ego_distribution(reference, 0.25, 0.1);

  // Agent 1: three crossing modes, top to bottom. Mode 1 meets the ego path
  // at the crossing step.
  std::vector<ModePrediction> agent1;
  agent1.push_back(straight_mode({5.0, 3.0}, {0.0, -3.0}, 0.4, horizon, dt));
  agent1.push_back(straight_mode({7.5, 3.0}, {0.0, -3.0}, 0.3, horizon, dt));
  agent1.push_back(straight_mode({2.5, 4.0}, {0.0, -3.0}, 0.3, horizon, dt));
  demo.predictions[1] = std::move(agent1);

  // Agent 2: parallel and diverging modes next to the ego.
  std::vector<ModePrediction> agent2;
  agent2.push_back(straight_mode({-2.0, 1.2}, {5.0, 0.0}, 0.5, horizon, dt));
  agent2.push_back(straight_mode({-2.0, 1.2}, {4.5, 1.0}, 0.5, horizon, dt));
  demo.predictions[2] = std::move(agent2);

  demo.profile = build_risk_profile(demo.ego, demo.predictions, alpha_risk);
  return demo;
}

void write_risk_demo_csv(const RiskDemoResult& demo, std::ostream& out) {
  out << "t,agent1_mode1,agent1_mode2,agent1_mode3,agent2_mode1,agent2_mode2\n";
  for (int t = 0; t < demo.horizon; ++t) {
    out << (t + 1);
    for (int mode = 0; mode < 3; ++mode) {
      out << "," << demo.profile.at(1, mode)[t];
    }
    for (int mode = 0; mode < 2; ++mode) {
      out << "," << demo.profile.at(2, mode)[t];
    }
    out << "\n";
  }
}

}  // namespace probe_mpc
