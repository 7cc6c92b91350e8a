#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pmlperm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitNotConverged = 3;

/// Runs one command line (without the program name). Results go to `out`
/// unless --out names a file; diagnostics go to `err`. Returns the exit
/// code: 0 on success, 2 on bad input or flags, 3 when a solver stopped
/// short of its tolerance (the result is still written).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pmlperm::cli
