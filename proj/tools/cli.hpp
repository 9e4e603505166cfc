#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace commspec::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitFailure = 3;

/// Runs the command line (args excludes the program name). Normal output
/// goes to `out` unless --out is given; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace commspec::cli
