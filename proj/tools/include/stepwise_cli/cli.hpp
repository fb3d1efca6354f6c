#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace stepwise::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;         // unexpected internal error
inline constexpr int kExitBackendFailure = 2;  // endpoint or script failed mid-session
inline constexpr int kExitConfigError = 3;     // bad flag, config file, dataset or trace

/// Entry point of the `stepwise` tool. `args` excludes the program name.
/// Verbs: run, bench, replay, report.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stepwise::cli
