#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "hypogen/error.hpp"

namespace hypogen {

enum ExitCode : int {
    exit_ok = 0,
    exit_internal = 1,
    exit_usage = 2,
    exit_config = 3,
    exit_input = 4,
    exit_gateway = 5,
    exit_parse = 6,
};

int exit_code_for(ErrorKind kind);

// Runs one command line (program name excluded) and returns the exit code.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hypogen
