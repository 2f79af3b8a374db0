#pragma once

#include <iosfwd>

namespace pqfl {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Entry point of the `pqfl` tool. Subcommands: run, bench-schemes,
/// attack-sim, partition-stats, make-fixtures. Returns 0 on success, 1 on a
/// usage error (help text goes to `err`) and 2 on a runtime error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pqfl
