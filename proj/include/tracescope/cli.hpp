#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tracescope::cli {

inline constexpr int kExitClean = 0;
inline constexpr int kExitAnomaly = 1;
inline constexpr int kExitError = 2;

/// Runs the command line `args` (program name excluded). Returns the exit
/// code: 0 clean, 1 anomaly flagged by `scan`, 2 usage or data error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace tracescope::cli
