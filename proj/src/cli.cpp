#include "probe_mpc/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>

#include "probe_mpc/monte_carlo.hpp"
#include "probe_mpc/risk_demo.hpp"
#include "probe_mpc/trace_io.hpp"

namespace probe_mpc {

namespace fs = std::filesystem;

RunSpec parse_args(const std::vector<std::string>& args) {
  CLI::App app{"risk-aware probing planner and traffic simulator"};
  app.require_subcommand(1);

  RunSpec spec;
  std::uint64_t seed_value = 0;
  bool seed_set = false;

  auto add_common = [&](CLI::App* cmd, bool need_config) {
    auto* config =
        cmd->add_option("--config", spec.config_path, "scenario config file");
    if (need_config) config->required();
    cmd->add_option("--variant", spec.variant,
                    "planner variant: probing|no_probing|conservative|all");
    cmd->add_option("--seed", seed_value, "campaign seed (overrides config)")
        ->each([&](const std::string&) { seed_set = true; });
    cmd->add_option("--out", spec.output_dir, "output directory");
    cmd->add_option("--threads", spec.threads, "parallel episode workers")
        ->check(CLI::PositiveNumber);
  };

  CLI::App* run = app.add_subcommand("run", "run one episode");
  add_common(run, true);

  CLI::App* mc = app.add_subcommand("montecarlo", "run a Monte Carlo campaign");
  add_common(mc, true);
  mc->add_option("--episodes", spec.episodes, "number of episodes")
      ->check(CLI::PositiveNumber);

  CLI::App* validate =
      app.add_subcommand("validate", "check a config and run one episode");
  add_common(validate, true);

  CLI::App* riskdemo =
      app.add_subcommand("riskdemo", "write the two-agent risk example");
  riskdemo->add_option("--out", spec.output_dir, "output directory");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  if (run->parsed()) spec.command = Command::kRun;
  if (mc->parsed()) spec.command = Command::kMonteCarlo;
  if (validate->parsed()) spec.command = Command::kValidate;
  if (riskdemo->parsed()) spec.command = Command::kRiskDemo;
  if (seed_set) spec.seed = seed_value;

  if (spec.variant != "probing" && spec.variant != "no_probing" &&
      spec.variant != "conservative" && spec.variant != "all") {
    throw UsageError("unknown variant: " + spec.variant);
  }
  if (spec.variant == "all" && spec.command != Command::kMonteCarlo) {
    throw UsageError("variant 'all' is only valid for montecarlo");
  }
  return spec;
}

namespace {

std::vector<Variant> variants_for(const std::string& name) {
  if (name == "all") {
    return {Variant::kProbing, Variant::kNoProbing, Variant::kConservative};
  }
  return {variant_from_name(name)};
}

int run_single(const RunSpec& spec, bool validate_mode) {
  ScenarioConfig config = load_config(spec.config_path);
  if (spec.seed) config.sim.seed = *spec.seed;
  const Variant variant = variant_from_name(spec.variant);
  auto [metrics, trace] = run_episode(config, variant);

  std::cout << "variant " << variant_name(variant)
            << ": success=" << (metrics.success ? 1 : 0)
            << " collision=" << (metrics.collision ? 1 : 0)
            << " time=" << metrics.time_to_complete
            << " gap1=" << metrics.gap_vehicle1
            << " gap2=" << metrics.gap_vehicle2
            << " velocity=" << metrics.mean_velocity << "\n";

  if (!validate_mode || !spec.output_dir.empty()) {
    const fs::path out_dir(spec.output_dir);
    const fs::path trace_dir = out_dir / "traces";
    std::error_code ec;
    fs::create_directories(trace_dir, ec);
    if (ec) {
      std::cerr << "cannot create output directory: " << trace_dir << "\n";
      return 1;
    }
    std::ofstream trace_file(trace_dir / "episode_0.jsonl");
    write_trace_jsonl(trace, trace_file);
    std::ofstream metrics_file(out_dir / "metrics.csv");
    write_metrics_csv_header(metrics_file);
    write_metrics_csv_row(0, variant, metrics, metrics_file);
    if (!trace_file || !metrics_file) {
      std::cerr << "failed writing outputs under " << out_dir << "\n";
      return 1;
    }
  }
  if (validate_mode && metrics.collision) {
    std::cerr << "validate: episode ended in a collision\n";
    return 2;
  }
  return 0;
}

int run_campaign(const RunSpec& spec) {
  ScenarioConfig config = load_config(spec.config_path);
  CampaignParams params;
  params.episodes = spec.episodes;
  params.seed = spec.seed ? *spec.seed : config.sim.seed;
  params.variants = variants_for(spec.variant);
  params.threads = spec.threads;

  const fs::path out_dir(spec.output_dir);
  const fs::path trace_dir = out_dir / "traces";
  std::error_code ec;
  fs::create_directories(trace_dir, ec);
  if (ec) {
    std::cerr << "cannot create output directory: " << trace_dir << "\n";
    return 1;
  }

  std::mutex io_mutex;
  TraceSink sink = [&](int episode, Variant variant, const EpisodeTrace& trace) {
    const fs::path path =
        trace_dir / ("episode_" + std::to_string(episode) + "_" +
                     variant_name(variant) + ".jsonl");
    std::lock_guard<std::mutex> lock(io_mutex);
    std::ofstream out(path);
    write_trace_jsonl(trace, out);
  };

  const CampaignResult result = run_monte_carlo(config, params, sink);

  std::ofstream metrics_file(out_dir / "metrics.csv");
  write_metrics_csv_header(metrics_file);
  for (const EpisodeRow& row : result.rows) {
    write_metrics_csv_row(row.episode, row.variant, row.metrics, metrics_file);
  }
  std::ofstream summary_file(out_dir / "campaign_summary.csv");
  write_campaign_csv(result, summary_file);
  if (!metrics_file || !summary_file) {
    std::cerr << "failed writing outputs under " << out_dir << "\n";
    return 1;
  }

  write_campaign_csv(result, std::cout);
  return 0;
}

int emit_risk_demo(const RunSpec& spec) {
  const RiskDemoResult demo = run_risk_demo();
  const fs::path out_dir(spec.output_dir);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    std::cerr << "cannot create output directory: " << out_dir << "\n";
    return 1;
  }
  std::ofstream out(out_dir / "riskdemo.csv");
  write_risk_demo_csv(demo, out);
  if (!out) {
    std::cerr << "failed writing " << (out_dir / "riskdemo.csv") << "\n";
    return 1;
  }
  std::cout << "wrote " << (out_dir / "riskdemo.csv").string() << "\n";
  return 0;
}

}  // namespace

int run_command(const RunSpec& spec) {
  switch (spec.command) {
    case Command::kRun:
      return run_single(spec, false);
    case Command::kValidate:
      return run_single(spec, true);
    case Command::kMonteCarlo:
      return run_campaign(spec);
    case Command::kRiskDemo:
      return emit_risk_demo(spec);
  }
  return 1;
}

}  // namespace probe_mpc
