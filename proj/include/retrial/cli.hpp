#pragma once

#include <ostream>

namespace retrial::cli {

/// Exit codes of the command-line tool.
enum Exit : int {
  kOk = 0,
  kFailed = 1,  // validate: some verdict failed; internal errors
  kUnstable = 2,
  kTruncation = 3,
  kInfeasible = 5,
  kUsage = 64,
};

/// Entry point of `retrialq`. Subcommands: analyze, simulate, validate, sweep,
/// optimize, bounds. Reports go to `out` (or --out), diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace retrial::cli
