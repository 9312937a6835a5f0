#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "probe_mpc/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    const probe_mpc::RunSpec spec = probe_mpc::parse_args(args);
    return probe_mpc::run_command(spec);
  } catch (const probe_mpc::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 64;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
