#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace chardial::cli {

/// Exit codes besides 0 (success) and CLI11's own parse-error codes.
inline constexpr int kExitFailure = 1;
inline constexpr int kExitBadPath = 2;
inline constexpr int kExitValidation = 3;
inline constexpr int kExitProvider = 4;

/// Runs the command line `args` (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace chardial::cli
