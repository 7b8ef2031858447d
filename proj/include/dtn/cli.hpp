#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dtn {

/// Exit codes of the dtn command.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitValidation = 2, kExitRuntime = 3 };

/// Runs the dtn command line (args excludes the program name). Failures
/// print one "dtn: error: ..." line to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dtn
