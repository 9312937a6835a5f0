#pragma once

#include <optional>
#include <string>
#include <vector>

#include "probe_mpc/scenario.hpp"

namespace probe_mpc {

enum class Command { kRun, kMonteCarlo, kValidate, kRiskDemo };

struct RunSpec {
  Command command = Command::kRun;
  std::string config_path;
  std::string variant = "probing";  // or "all" for montecarlo
  int episodes = 50;
  std::optional<std::uint64_t> seed;  // overrides the config seed
  std::string output_dir = "out";
  int threads = 1;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Parses argv (without the program name). Throws UsageError on unknown
/// flags, a missing config, or non-positive episode counts.
RunSpec parse_args(const std::vector<std::string>& args);

/// Executes the run. Returns the process exit status: nonzero for IO
/// failures and for collisions in validate mode.
int run_command(const RunSpec& spec);

}  // namespace probe_mpc
