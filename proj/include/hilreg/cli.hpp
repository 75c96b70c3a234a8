#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hilreg {

inline constexpr const char* kVersion = "0.1.0";

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int config = 2;
inline constexpr int experiment = 3;
inline constexpr int io = 4;
}  // namespace exit_code

/// Runs the command line `args` (without the program name). Diagnostics go to
/// `err`, short summaries to `out`. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hilreg
