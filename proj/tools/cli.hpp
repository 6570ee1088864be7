#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace geoflow::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitAssert = 3;

/// Runs one command; `args` excludes the program name.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace geoflow::cli
