#include "probe_mpc/monte_carlo.hpp"

#include <atomic>
#include <cmath>
#include <random>
#include <thread>

#include "probe_mpc/geometry.hpp"

namespace probe_mpc {

namespace {

bool spawns_clear(const ScenarioConfig& config) {
  std::vector<const AgentState*> spawns;
  spawns.push_back(&config.ego_spawn);
  for (const AgentSpec& a : config.agents) spawns.push_back(&a.spawn);
  for (std::size_t i = 0; i < spawns.size(); ++i) {
    for (std::size_t j = i + 1; j < spawns.size(); ++j) {
      if (footprints_overlap(*spawns[i], *spawns[j],
                             config.sim.footprint_length + 1.0,
                             config.sim.footprint_width + 0.4)) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace

ScenarioConfig randomize_episode(const ScenarioConfig& base,
                                 std::uint64_t campaign_seed,
                                 int episode_index) {
  std::seed_seq seq{campaign_seed,
                    static_cast<std::uint64_t>(episode_index) + 1};
  std::mt19937_64 rng(seq);

  const Eigen::Vector3d aggressive_mean(0.5, 0.3, 0.3);
  const Eigen::Vector3d defensive_mean(0.2, 0.6, 0.2);
  const double phi_std = std::sqrt(0.05);

  std::bernoulli_distribution defensive(0.5);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> along(-3.0, 3.0);
  std::uniform_real_distribution<double> speed_jitter(-0.5, 0.5);

  ScenarioConfig config = base;
  config.sim.seed = campaign_seed * 0x9E3779B97F4A7C15ull +
                    static_cast<std::uint64_t>(episode_index) + 1;

  for (AgentSpec& agent : config.agents) {
    const Eigen::Vector3d mean =
        defensive(rng) ? defensive_mean : aggressive_mean;
    Eigen::Vector3d phi;
    for (int i = 0; i < 3; ++i) phi(i) = mean(i) + phi_std * normal(rng);
    agent.phi = phi.cwiseMax(0.0);
    if (agent.switch_phi) {
      const Eigen::Vector3d switch_mean =
          defensive(rng) ? defensive_mean : aggressive_mean;
      Eigen::Vector3d sw;
      for (int i = 0; i < 3; ++i) sw(i) = switch_mean(i) + phi_std * normal(rng);
      agent.switch_phi = sw.cwiseMax(0.0);
    }
  }

  // Spawn jitter along each vehicle's heading, redrawn until clear.
  for (int attempt = 0; attempt < 50; ++attempt) {
    ScenarioConfig candidate = config;
    for (AgentSpec& agent : candidate.agents) {
      const double shift = along(rng);
      agent.spawn.x += shift * std::cos(agent.spawn.theta);
      agent.spawn.y += shift * std::sin(agent.spawn.theta);
      const double dv = speed_jitter(rng);
      agent.spawn.v = std::max(0.0, agent.spawn.v + dv);
    }
    if (spawns_clear(candidate)) return candidate;
  }
  return config;  // fall back to unjittered spawns
}

CampaignResult run_monte_carlo(const ScenarioConfig& base,
                               const CampaignParams& params,
                               const TraceSink& sink) {
  if (params.episodes < 1) {
    throw std::invalid_argument("monte carlo: episodes must be >= 1");
  }
  const int variants = static_cast<int>(params.variants.size());
  CampaignResult result;
  result.rows.resize(static_cast<std::size_t>(params.episodes) * variants);

  std::atomic<int> next_episode{0};
  auto worker = [&]() {
    while (true) {
      const int episode = next_episode.fetch_add(1);
      if (episode >= params.episodes) break;
      const ScenarioConfig config =
          randomize_episode(base, params.seed, episode);
      for (int v = 0; v < variants; ++v) {
        const Variant variant = params.variants[v];
        auto [metrics, trace] = run_episode(config, variant);
        result.rows[static_cast<std::size_t>(episode) * variants + v] = {
            episode, variant, metrics};
        if (sink) sink(episode, variant, trace);
      }
    }
  };

  const int thread_count = std::max(1, params.threads);
  if (thread_count == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < thread_count; ++i) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  for (int v = 0; v < variants; ++v) {
    VariantSummary summary;
    summary.variant = params.variants[v];
    summary.episodes = params.episodes;
    int successes = 0;
    int collisions = 0;
    double time_sum = 0.0, gap1_sum = 0.0, gap2_sum = 0.0;
    double velocity_sum = 0.0, lon_sum = 0.0, ang_sum = 0.0;
    for (int e = 0; e < params.episodes; ++e) {
      const EpisodeMetrics& m =
          result.rows[static_cast<std::size_t>(e) * variants + v].metrics;
      if (m.success) {
        ++successes;
        time_sum += m.time_to_complete;
        gap1_sum += m.gap_vehicle1;
        gap2_sum += m.gap_vehicle2;
      }
      if (m.collision) ++collisions;
      velocity_sum += m.mean_velocity;
      lon_sum += m.lon_jerk;
      ang_sum += m.ang_jerk;
    }
    summary.success_rate = static_cast<double>(successes) / params.episodes;
    summary.collision_rate = static_cast<double>(collisions) / params.episodes;
    if (successes > 0) {
      summary.mean_time_to_complete = time_sum / successes;
      summary.mean_gap_vehicle1 = gap1_sum / successes;
      summary.mean_gap_vehicle2 = gap2_sum / successes;
    }
    summary.mean_velocity = velocity_sum / params.episodes;
    summary.mean_lon_jerk = lon_sum / params.episodes;
    summary.mean_ang_jerk = ang_sum / params.episodes;
    result.summaries.push_back(summary);
  }
  return result;
}

}  // namespace probe_mpc
