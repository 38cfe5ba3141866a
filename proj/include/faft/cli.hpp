/**
 * @file cli.hpp
 * @brief The faft command line: simulate, fit, replicate and report.
 *
 * Exit codes: 0 success, 1 unexpected error, 2 configuration or usage error,
 * 3 data or archive error, 4 convergence failure (including singular
 * information and failed Monte Carlo cells), 5 support violation.
 */
#pragma once

#include <exception>
#include <iosfwd>

namespace faft::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUnexpected = 1,
  kConfig = 2,
  kData = 3,
  kConvergence = 4,
  kSupport = 5,
};

/// Maps a library exception to its exit code.
int exit_code_for(const std::exception& e);

/// Runs the command line with the given arguments (argv[0] is the program name).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace faft::cli
