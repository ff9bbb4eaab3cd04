#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace clip {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,
  kExitMissingFlag = 3,
  kExitIo = 4,
  kExitShape = 5,
  kExitConfig = 6,
  kExitFormat = 7,
  kExitNumeric = 8,
  kExitInvalid = 9,
};

/// Runs one subcommand. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace clip
