#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace wolbachia::cli {

enum ExitCode : int {
    exit_ok = 0,
    exit_input = 1,
    exit_validation = 2,
    exit_numerical = 3,
};

/// Entry point of the `wolbachia` command, usable in-process by tests.
/// args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wolbachia::cli
