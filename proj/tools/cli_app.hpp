#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace delaystab::cli {

/// Process exit codes.
enum ExitCode : int {
    kOk = 0,            // success, or verdict "consistent"
    kError = 1,         // usage, configuration or I/O error
    kEscaped = 2,       // simulate: the trajectory escaped before T
    kFalsified = 3,
    kInconclusive = 4,
};

/// Runs one command. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace delaystab::cli
