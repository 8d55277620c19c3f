#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace compcap {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;      // usage, parse or validation error
inline constexpr int kExitParameter = 3;  // missing or undeclared parameter

// Runs the tool with `args` (program name excluded). Reports go to `out`,
// diagnostics to `err`; nothing is written to `out` on failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace compcap
