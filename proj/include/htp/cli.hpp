#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace htp {

/// Exit codes: 0 success, 1 usage, 2 data or certification error, 3 backend error.
enum ExitCode { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitBackend = 3 };

/// Runs the `htp` command line. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace htp
