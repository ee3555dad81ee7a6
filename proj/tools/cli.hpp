#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tmsr::cli {

inline constexpr int kReachable = 0;
inline constexpr int kUnreachable = 1;
inline constexpr int kBoundExhausted = 2;
inline constexpr int kUsage = 64;
inline constexpr int kDataError = 65;

/// Runs one command. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tmsr::cli
