#pragma once

#include <ostream>

namespace te::cli {

enum ExitCode : int {
    kSuccess = 0,
    kUsage = 1,
    kInput = 2,
    kAssertion = 3,
};

/// Entry point for the terminal-embed tool. Data goes to `out`, diagnostics
/// to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace te::cli
