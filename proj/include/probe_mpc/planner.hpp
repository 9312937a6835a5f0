#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <random>
#include <vector>

#include "probe_mpc/beliefs.hpp"
#include "probe_mpc/dynamics.hpp"
#include "probe_mpc/lane_map.hpp"
#include "probe_mpc/objective.hpp"
#include "probe_mpc/prediction.hpp"
#include "probe_mpc/risk.hpp"

namespace probe_mpc {

struct PlannerParams {
  int horizon = 25;            // T, planning steps
  double dt = 0.1;
  int max_iterations = 50;
  double convergence_tol = 1e-4;  // |delta objective| termination
  double fd_step = 1e-3;          // central finite-difference step
  double initial_step = 0.1;      // gradient step before backtracking
  double min_step = 1e-6;
  double d_sat = 10.0;            // ego-distance feature saturation [m]
  double ref_lateral_gain = 1.0;  // reference lane-approach rate [1/s]
  double ref_lateral_vmax = 1.2;  // reference lateral speed cap [m/s]
};

struct ObjectiveBreakdown {
  double utility = 0.0;         // tracking reward (<= 0)
  double safety_penalty = 0.0;  // soft-barrier sum (>= 0)
  double info = 0.0;            // summed per-agent information gain
};

struct PlanResult {
  std::vector<ControlInput> inputs;
  Trajectory trajectory;
  double objective_value = 0.0;
  ObjectiveBreakdown breakdown;
  int iterations = 0;
  bool converged = false;
};

/// One agent as seen by a single plan call.
struct AgentPlanInput {
  int id = 0;
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  double target_speed = 5.0;                // v_bar in the reward features
  std::vector<ModePrediction> modes;        // K predictions
  const BeliefParticles* belief = nullptr;  // frozen during the plan call
};

/// Immutable, precomputed evaluation context for one plan call.
class PlanContext {
 public:
  PlanContext(const AgentState& state0, Trajectory reference,
              const LaneMap* map, std::vector<AgentPlanInput> agents,
              const RiskProfile& risk, const ObjectiveWeights& weights,
              const DynamicsLimits& limits, const PlannerParams& params);

  std::pair<double, ObjectiveBreakdown> evaluate(
      std::span<const ControlInput> inputs) const;

  /// Per-agent per-mode gains of the last evaluate() call on this thread is
  /// not retained; use evaluate_with_gains for diagnostics.
  std::pair<double, ObjectiveBreakdown> evaluate_with_gains(
      std::span<const ControlInput> inputs,
      std::map<int, std::vector<double>>* gains_out) const;

  const AgentState& state0() const { return state0_; }
  const Trajectory& reference() const { return reference_; }
  const PlannerParams& params() const { return params_; }
  const DynamicsLimits& limits() const { return limits_; }
  const ObjectiveWeights& weights() const { return weights_; }
  const RiskProfile& risk() const { return risk_; }

 private:
  struct PreparedMode {
    Eigen::ArrayXd mean_x, mean_y;        // over t = 1..T
    Eigen::ArrayXd inv00, inv01, inv11;   // inverse covariance entries
    Eigen::ArrayXd scaled_risk;           // L * r(t)
    double prior_p = 0.0;
    bool gated = false;
    double f1 = 0.0, f3 = 0.0;  // ego-independent dt-scaled feature sums
  };
  struct PreparedAgent {
    int id = 0;
    const BeliefParticles* belief = nullptr;
    Eigen::VectorXd prior_p;
    Eigen::VectorXd log_prior;
    std::vector<PreparedMode> modes;
  };

  AgentState state0_;
  Trajectory reference_;
  const LaneMap* map_;
  ObjectiveWeights weights_;
  DynamicsLimits limits_;
  PlannerParams params_;
  RiskProfile risk_;
  std::vector<PreparedAgent> agents_;
};

std::pair<double, ObjectiveBreakdown> evaluate_objective(
    std::span<const ControlInput> inputs, const PlanContext& context);

/// Projected gradient ascent with central finite-difference gradients and a
/// halving backtracking line search. Accepted objectives never decrease and
/// the result never beats the bounds.
PlanResult plan(const PlanContext& context,
                const std::vector<ControlInput>& warm_start);

/// Reference trajectory toward a target lane at a target speed, approaching
/// the centerline at a bounded lateral rate.
Trajectory build_reference(const AgentState& ego, const LaneMap& map,
                           std::size_t target_lane, double target_speed,
                           const PlannerParams& params);

struct TrackedAgent {
  int id = 0;
  AgentState state;
  double target_speed = 5.0;
};

struct WorldSnapshot {
  double time = 0.0;
  AgentState ego;
  std::vector<TrackedAgent> agents;
};

/// Per-step planner diagnostics for traces and tests.
struct StepDiagnostics {
  double time = 0.0;
  double objective_value = 0.0;
  ObjectiveBreakdown breakdown;
  int iterations = 0;
  bool converged = false;
  std::map<int, std::vector<double>> risk_max;    // agent -> per-mode max_t r
  std::map<int, std::vector<double>> info_gains;  // agent -> per-mode gain
  std::map<int, Eigen::Vector3d> belief_means;
};

struct PlannerSetup {
  PlannerParams params;
  ObjectiveWeights weights;
  PredictorParams predictor;
  DynamicsLimits limits;
  std::size_t target_lane = 0;
  double target_speed = 5.0;
  int belief_particles = 2000;
  Eigen::Vector3d belief_prior_mean = Eigen::Vector3d::Constant(1.0 / 3.0);
  double belief_prior_var = 0.05;
  BeliefUpdateParams assimilation;
  std::uint64_t seed = 1;
};

/// Receding-horizon planner owning the per-episode state: agent histories,
/// particle beliefs, the warm-started solution, and the short record of past
/// predictions used to assimilate observations.
class MpcPlanner {
 public:
  MpcPlanner(const LaneMap& map, PlannerSetup setup);

  /// Predict, assess risk, plan; returns the first input and diagnostics.
  std::pair<ControlInput, PlanResult> mpc_step(const WorldSnapshot& world);

  /// Assimilate agent states observed after the world advanced one step.
  void observe(const WorldSnapshot& world);

  const BeliefParticles* belief(int agent_id) const;
  const StepDiagnostics& last_diagnostics() const { return diagnostics_; }
  const PlannerSetup& setup() const { return setup_; }

 private:
  struct AssimRecord {
    double time = 0.0;
    std::map<int, std::vector<ModePrediction>> modes;
    std::map<int, Eigen::Matrix3Xd> feature_sums;
    std::map<int, Eigen::VectorXd> prior_p;
  };

  const LaneMap& map_;
  PlannerSetup setup_;
  std::mt19937_64 rng_;
  std::map<int, std::vector<AgentState>> histories_;
  std::map<int, BeliefParticles> beliefs_;
  std::vector<ControlInput> previous_solution_;
  std::deque<AssimRecord> assim_buffer_;
  StepDiagnostics diagnostics_;
  double last_time_ = -1.0;
  bool has_cached_result_ = false;
  PlanResult cached_result_;
};

}  // namespace probe_mpc
