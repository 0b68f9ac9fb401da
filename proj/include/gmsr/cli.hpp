#pragma once

namespace gmsr {

// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitInvalid = 1,     // parse or validation failure
  kExitInfeasible = 2,  // feasibility was required and fails
  kExitRuntime = 3,
};

/// Entry point of the gmsr tool: validate, optimum, fluid, simulate,
/// overload, certify, report.
int run_command(int argc, const char* const* argv);

}  // namespace gmsr
