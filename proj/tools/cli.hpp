#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qrenet::cli {

// Exit codes: 0 success, 1 unexpected failure, 2 invalid command line or
// config (nothing written), 3 solver did not converge (diagnostics written).
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kInvalid = 2;
inline constexpr int kNoConvergence = 3;

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace qrenet::cli
