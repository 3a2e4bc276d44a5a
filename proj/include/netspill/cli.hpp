#pragma once

#include <iosfwd>

namespace netspill {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitOther = 1, kExitInput = 2, kExitConvergence = 3, kExitPositivity = 4 };

/// Runs the `netspill` command line. Progress goes to `out`, errors to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace netspill
