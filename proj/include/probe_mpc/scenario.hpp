#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "probe_mpc/beliefs.hpp"
#include "probe_mpc/lane_map.hpp"
#include "probe_mpc/objective.hpp"
#include "probe_mpc/planner.hpp"
#include "probe_mpc/prediction.hpp"
#include "probe_mpc/types.hpp"

namespace probe_mpc {

enum class Variant { kProbing, kNoProbing, kConservative };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

enum class ScenarioType { kMerge, kCross };

/// One scripted agent: spawn, behavior weights, optional scheduled switch,
/// and the path (lane/connector indices) it follows.
struct AgentSpec {
  AgentState spawn;
  Eigen::Vector3d phi = Eigen::Vector3d::Constant(1.0 / 3.0);
  double target_speed = 5.0;
  std::vector<int> route;  // indices into LaneMap::path()
  std::optional<double> switch_time;
  std::optional<Eigen::Vector3d> switch_phi;
};

struct SimParams {
  ScenarioType type = ScenarioType::kMerge;
  double episode_length = 20.0;
  double dt = 0.1;
  std::uint64_t seed = 1;
  double success_x = 0.0;  // exit line for cross scenarios
  double footprint_length = 4.5;
  double footprint_width = 1.8;
};

struct ScenarioConfig {
  SimParams sim;
  LaneMap lane_map;
  AgentState ego_spawn;
  std::size_t ego_target_lane = 0;
  double ego_target_speed = 5.0;
  std::vector<AgentSpec> agents;
  ObjectiveWeights weights;
  PredictorParams predictor;
  PlannerParams planner;
  int belief_particles = 2000;
  Eigen::Vector3d belief_prior_mean = Eigen::Vector3d::Constant(1.0 / 3.0);
  double belief_prior_var = 0.05;
  BeliefUpdateParams assimilation;
  DynamicsLimits limits;

  /// Throws std::invalid_argument with a field path on violations.
  void validate() const;

  /// Objective weights with the variant applied: no_probing zeroes the info
  /// weight; conservative additionally quadruples the barrier sharpness.
  ObjectiveWeights variant_weights(Variant variant) const;

  PlannerSetup planner_setup(Variant variant) const;

  /// Concatenated centerline over the agent's route indices.
  Lane composite_route(const AgentSpec& agent) const;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Parses the structured-text scenario format. Unknown sections or keys are
/// errors carrying the offending line number; missing optional fields take
/// the built-in defaults.
ScenarioConfig parse_config(const std::string& text,
                            const std::string& source_name = "<config>");
ScenarioConfig load_config(const std::string& path);
std::string write_config(const ScenarioConfig& config);

}  // namespace probe_mpc
