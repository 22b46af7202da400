#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace chainfuse {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFailure = 2;

// Environment variable that overrides the default results directory.
inline constexpr const char* kResultsDirEnv = "CHAINFUSE_RESULTS_DIR";

const char* version();

// Entry point of the chainfuse tool; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace chainfuse
