#pragma once

// Command-line front end. Arguments exclude the program name.

#include <iosfwd>
#include <string>
#include <vector>

namespace sk::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // numerical failure, or an --assert band violated
inline constexpr int kExitUsage = 2;

// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "SKCAVITY_OUTPUT_DIR";

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(const std::vector<std::string>& args);

std::string version();

}  // namespace sk::cli
