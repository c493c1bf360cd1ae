#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ocp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

/// Runs the command line `args` (without the program name). Normal output goes to
/// `out`, usage and error messages to `err`; logs go to stderr.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace ocp::cli
