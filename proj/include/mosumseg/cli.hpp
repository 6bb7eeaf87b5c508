#pragma once

#include <iosfwd>

namespace mosumseg {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumerical = 3;

// Entry point of the mosumseg tool: subcommands segment, simulate and
// calibrate. Returns the process exit code; never throws.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv);

} // namespace mosumseg
