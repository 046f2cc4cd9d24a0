#pragma once

#include <string>
#include <vector>

namespace dff::cli {

/// Exit codes of cli_dispatch.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFailure = 2;

/// Runs one subcommand; `args` excludes the program name. Diagnostics go to stderr.
int cli_dispatch(const std::vector<std::string>& args);

/// Quick oracle checks over every module; prints one line per check. True when all pass.
bool run_selftest();

} // namespace dff::cli
