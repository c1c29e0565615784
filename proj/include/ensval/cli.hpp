// Command-line front end: `ensval <bound|optimize|knn-gibbs|simulate|sweep>`.

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace ensval::cli {

enum ExitStatus : int
{
    kSuccess = 0,
    kInternalError = 1,
    kUsageError = 2,
    kPreconditionViolation = 3,
    kOracleMismatch = 4,
    kCoverageFailure = 5,
};

/// Parses args (without the program name), runs the subcommand and writes its
/// result to out and diagnostics to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ensval::cli
