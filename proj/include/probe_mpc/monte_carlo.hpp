#pragma once

#include <functional>
#include <vector>

#include "probe_mpc/simulator.hpp"

namespace probe_mpc {

struct CampaignParams {
  int episodes = 50;
  std::uint64_t seed = 1;
  std::vector<Variant> variants = {Variant::kProbing, Variant::kNoProbing,
                                   Variant::kConservative};
  int threads = 1;
};

struct EpisodeRow {
  int episode = 0;
  Variant variant = Variant::kProbing;
  EpisodeMetrics metrics;
};

struct VariantSummary {
  Variant variant = Variant::kProbing;
  int episodes = 0;
  double success_rate = 0.0;
  double collision_rate = 0.0;
  double mean_time_to_complete = 0.0;  // over successful episodes
  double mean_gap_vehicle1 = 0.0;      // over successful episodes
  double mean_gap_vehicle2 = 0.0;
  double mean_velocity = 0.0;
  double mean_lon_jerk = 0.0;
  double mean_ang_jerk = 0.0;
};

struct CampaignResult {
  std::vector<EpisodeRow> rows;  // episode-major, variant order within
  std::vector<VariantSummary> summaries;
};

/// Deterministic per-episode draw: behavior types and phi are sampled
/// (aggressive N([0.5 0.3 0.3], 0.05 I) or defensive N([0.2 0.6 0.2], 0.05 I),
/// clamped nonnegative), spawns jittered along the vehicle heading, and
/// speeds perturbed. Draws depend only on (campaign seed, episode index),
/// so every variant replays the identical world.
ScenarioConfig randomize_episode(const ScenarioConfig& base,
                                 std::uint64_t campaign_seed,
                                 int episode_index);

using TraceSink =
    std::function<void(int episode, Variant variant, const EpisodeTrace&)>;

/// Shared-draw Monte Carlo campaign over the requested variants. Episodes
/// run on `threads` workers; results are reduced in episode order so the
/// output is bit-identical for any thread count.
CampaignResult run_monte_carlo(const ScenarioConfig& base,
                               const CampaignParams& params,
                               const TraceSink& sink = nullptr);

}  // namespace probe_mpc
