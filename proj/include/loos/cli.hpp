#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace loos {

/// Process exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitNumeric = 3, kExitIo = 4 };

/// Runs the command-line tool. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace loos
