#pragma once

#include <string>
#include <vector>

namespace groundcheck {

/// Runs one CLI invocation (arguments exclude the program name) and returns
/// the process exit code: 0 success, 1 usage error, 2 data error, 3 pipeline
/// error.
int run_command(const std::vector<std::string>& args);

}  // namespace groundcheck
