#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ddns {

/// Runs the command line (args excludes the program name). Returns the exit
/// code: 0 success, 2 validation failure, 3 numerical failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ddns
