#include "probe_mpc/simulator.hpp"

#include <cmath>
#include <stdexcept>

#include "probe_mpc/agent_policy.hpp"
#include "probe_mpc/dynamics.hpp"
#include "probe_mpc/geometry.hpp"

namespace probe_mpc {

EpisodeMetrics compute_metrics(const EpisodeTrace& trace) {
  if (trace.vehicles.empty()) {
    throw std::invalid_argument("compute_metrics: empty trace");
  }
  EpisodeMetrics metrics;
  metrics.success = trace.success;
  metrics.collision = trace.collision;
  metrics.time_to_complete =
      trace.completion_time >= 0.0 ? trace.completion_time : trace.episode_length;

  std::vector<const VehicleRecord*> ego_steps;
  for (const VehicleRecord& r : trace.vehicles) {
    if (r.id == 0) ego_steps.push_back(&r);
  }
  if (ego_steps.empty()) {
    throw std::invalid_argument("compute_metrics: trace has no ego records");
  }

  double v_sum = 0.0;
  for (const VehicleRecord* r : ego_steps) v_sum += r->v;
  metrics.mean_velocity = v_sum / static_cast<double>(ego_steps.size());

  const double dt = trace.dt;
  if (ego_steps.size() >= 2) {
    double jerk_sum = 0.0;
    for (std::size_t i = 0; i + 1 < ego_steps.size(); ++i) {
      jerk_sum += (ego_steps[i + 1]->a - ego_steps[i]->a) / dt;
    }
    metrics.lon_jerk = jerk_sum / static_cast<double>(ego_steps.size() - 1);
  }
  if (ego_steps.size() >= 3) {
    double ang_sum = 0.0;
    for (std::size_t i = 0; i + 2 < ego_steps.size(); ++i) {
      ang_sum += (ego_steps[i + 2]->omega - 2.0 * ego_steps[i + 1]->omega +
                  ego_steps[i]->omega) /
                 (dt * dt);
    }
    metrics.ang_jerk = ang_sum / static_cast<double>(ego_steps.size() - 2);
  }

  // Gaps to agents 1 and 2 at the completion instant.
  const double instant = ego_steps.back()->t;
  const VehicleRecord* ego_last = ego_steps.back();
  auto gap_to = [&](int agent_id) {
    for (const VehicleRecord& r : trace.vehicles) {
      if (r.id == agent_id && std::abs(r.t - instant) < 1e-9) {
        return std::hypot(r.x - ego_last->x, r.y - ego_last->y);
      }
    }
    return 0.0;
  };
  if (trace.agent_count >= 1) metrics.gap_vehicle1 = gap_to(1);
  if (trace.agent_count >= 2) metrics.gap_vehicle2 = gap_to(2);
  return metrics;
}

std::pair<EpisodeMetrics, EpisodeTrace> run_episode(const ScenarioConfig& config,
                                                    Variant variant) {
  config.validate();
  const double dt = config.sim.dt;
  const int total_steps =
      static_cast<int>(std::lround(config.sim.episode_length / dt));

  MpcPlanner planner(config.lane_map, config.planner_setup(variant));

  AgentState ego = config.ego_spawn;
  std::vector<AgentState> agents;
  std::vector<Lane> routes;
  for (const AgentSpec& spec : config.agents) {
    agents.push_back(spec.spawn);
    routes.push_back(config.composite_route(spec));
  }

  AgentPolicyParams policy_params;
  policy_params.dt = dt;

  EpisodeTrace trace;
  trace.dt = dt;
  trace.episode_length = config.sim.episode_length;
  trace.agent_count = static_cast<int>(agents.size());

  const Lane& target_lane = config.lane_map.lanes[config.ego_target_lane];

  for (int step_index = 0; step_index < total_steps; ++step_index) {
    const double t = step_index * dt;

    WorldSnapshot snapshot;
    snapshot.time = t;
    snapshot.ego = ego;
    for (std::size_t i = 0; i < agents.size(); ++i) {
      snapshot.agents.push_back({static_cast<int>(i) + 1, agents[i],
                                 config.agents[i].target_speed});
    }

    auto [ego_input, result] = planner.mpc_step(snapshot);
    trace.planner_steps.push_back(planner.last_diagnostics());

    // Scripted agents: reward maximization with scheduled phi switches.
    std::vector<ControlInput> agent_inputs(agents.size());
    for (std::size_t i = 0; i < agents.size(); ++i) {
      const AgentSpec& spec = config.agents[i];
      Eigen::Vector3d phi = spec.phi;
      if (spec.switch_time && t >= *spec.switch_time && spec.switch_phi) {
        phi = *spec.switch_phi;
      }
      std::vector<AgentState> neighbors;
      neighbors.push_back(ego);
      for (std::size_t j = 0; j < agents.size(); ++j) {
        if (j != i) neighbors.push_back(agents[j]);
      }
      agent_inputs[i] = agent_policy(agents[i], phi, neighbors, routes[i],
                                     spec.target_speed, config.limits,
                                     policy_params);
    }

    trace.vehicles.push_back(
        {t, 0, ego.x, ego.y, ego.theta, ego.v, ego_input.a, ego_input.omega});
    for (std::size_t i = 0; i < agents.size(); ++i) {
      trace.vehicles.push_back({t, static_cast<int>(i) + 1, agents[i].x,
                                agents[i].y, agents[i].theta, agents[i].v,
                                agent_inputs[i].a, agent_inputs[i].omega});
    }

    ego = step(ego, ego_input, dt, config.limits);
    for (std::size_t i = 0; i < agents.size(); ++i) {
      agents[i] = step(agents[i], agent_inputs[i], dt, config.limits);
    }
    const double t_next = t + dt;

    WorldSnapshot observed;
    observed.time = t_next;
    observed.ego = ego;
    for (std::size_t i = 0; i < agents.size(); ++i) {
      observed.agents.push_back({static_cast<int>(i) + 1, agents[i],
                                 config.agents[i].target_speed});
    }
    planner.observe(observed);

    bool collided = false;
    for (const AgentState& agent : agents) {
      if (footprints_overlap(ego, agent, config.sim.footprint_length,
                             config.sim.footprint_width)) {
        collided = true;
        break;
      }
    }
    if (collided) {
      trace.collision = true;
      trace.completion_time = t_next;
      break;
    }

    bool completed = false;
    if (config.sim.type == ScenarioType::kMerge) {
      completed = footprint_inside_lane(ego, target_lane,
                                        config.sim.footprint_length,
                                        config.sim.footprint_width);
    } else {
      completed = ego.x >= config.sim.success_x;
    }
    if (completed) {
      trace.success = true;
      trace.completion_time = t_next;
      // Final snapshot so gap metrics see the completion instant.
      trace.vehicles.push_back({t_next, 0, ego.x, ego.y, ego.theta, ego.v,
                                ego_input.a, ego_input.omega});
      for (std::size_t i = 0; i < agents.size(); ++i) {
        trace.vehicles.push_back({t_next, static_cast<int>(i) + 1, agents[i].x,
                                  agents[i].y, agents[i].theta, agents[i].v,
                                  agent_inputs[i].a, agent_inputs[i].omega});
      }
      break;
    }
  }

  return {compute_metrics(trace), std::move(trace)};
}

}  // namespace probe_mpc
