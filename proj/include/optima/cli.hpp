#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace optima {

inline constexpr const char* kToolVersion = "0.1.0";

/// Exit codes of the command line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

/// Runs one subcommand. `args` excludes the program name. Errors are written
/// to `err` as a single JSON object.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run_cli(int argc, char** argv);

}  // namespace optima
