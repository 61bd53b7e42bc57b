// ghost-turb subcommands. Each returns a process exit code:
// 0 success, 1 tolerance failure, 2 configuration error, 3 statistical insufficiency.
#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "ghostturb/run_config.hpp"

namespace ghostturb {

enum ExitCode : int {
  kExitOk = 0,
  kExitToleranceFailure = 1,
  kExitConfigError = 2,
  kExitInsufficient = 3,
};

inline constexpr const char* kVersion = "1.0.0";

int cmd_rho0(const RunConfig& cfg, std::ostream& out);
int cmd_simulate(const RunConfig& cfg, std::ostream& out);
int cmd_analytic(const RunConfig& cfg, std::ostream& out);
int cmd_compare(const RunConfig& cfg, std::ostream& out);

/// Full command line: `ghost-turb rho0|simulate|analytic|compare --config <file>
/// [--seed N] [--out DIR] [--frames N] [--rho0-mm X]`. Library errors are
/// mapped to exit codes and reported on `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ghostturb
