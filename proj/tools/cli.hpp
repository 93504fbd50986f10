#pragma once

// Command-line front end. Kept apart from main() so tests can drive it.

#include "taylorcl/experiment.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace taylorcl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;

/// argv[0] is the program name.
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace taylorcl::cli
