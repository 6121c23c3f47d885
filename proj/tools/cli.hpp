#pragma once

#include <iosfwd>

namespace ntfa::cli {

enum ExitCode : int { kSuccess = 0, kUsage = 1, kDataError = 2, kNumericalError = 3 };

/// Runs the command line.  Diagnostics go to `err`, progress and results
/// summaries to `out`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ntfa::cli
