#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace smoothq {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntimeError = 1;
inline constexpr int kExitUsageError = 2;

/// Entry point of the `smoothq` tool. `args` excludes the program name.
///
/// Subcommands: run, compare, oracle, check-schedules. Usage errors (bad or
/// missing flags, malformed schedule/smoothing/agent strings) print usage to
/// `err` and return 2; failures while running return 1.
int cli_main(std::span<const std::string> args, std::ostream& out, std::ostream& err);

int cli_main(int argc, char** argv);

}  // namespace smoothq
