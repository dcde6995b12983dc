#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mvsk::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;   ///< bad flags, unreadable or malformed input
inline constexpr int kExitSolver = 3;  ///< solver failure

/// Runs the command line `args` (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mvsk::cli
