#pragma once

#include <ostream>

#include "probe_mpc/risk.hpp"

namespace probe_mpc {

/// Two-agent risk demonstration scene: the ego reference runs left to right;
/// agent 1 crosses it top to bottom with three modes (likelihoods 0.4, 0.3,
/// 0.3), the highest-likelihood one meeting the ego path at the crossing
/// step; agent 2 runs parallel with two equally likely modes, one staying
/// parallel and one diverging.
struct RiskDemoResult {
  EgoDistribution ego;
  PredictionSet predictions;
  RiskProfile profile;
  int horizon = 25;
  int crossing_step = 10;  // step where agent 1 mode 1 meets the ego path
};

RiskDemoResult run_risk_demo(double alpha_risk = 0.1);

/// CSV with one column per mode curve: t, then r for agent 1 modes 1..3 and
/// agent 2 modes 1..2.
void write_risk_demo_csv(const RiskDemoResult& demo, std::ostream& out);

}  // namespace probe_mpc
