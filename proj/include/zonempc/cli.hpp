#pragma once

#include <iosfwd>

namespace zonempc {

inline constexpr int kExitOk = 0;
inline constexpr int kExitSolverFailure = 2;
inline constexpr int kExitConfigError = 3;
inline constexpr int kExitCertifyFailure = 4;

// Entry point of the command-line tool; returns the process exit status.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace zonempc
