#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace malens::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitProvider = 3;
inline constexpr int kExitInternal = 4;

/// Parses `args` (without the program name), runs the chosen subcommand and
/// returns the process exit code. Errors are reported on `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace malens::cli
