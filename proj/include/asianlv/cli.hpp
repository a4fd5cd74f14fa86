#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace asianlv {

enum ExitCode { exit_ok = 0, exit_validation = 1, exit_numeric = 2, exit_check_failed = 3 };

/// Runs `asianlv <command> [options]`; `args` excludes the program name.
/// Returns the process exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace asianlv
