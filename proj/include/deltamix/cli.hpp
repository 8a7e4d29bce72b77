#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace deltamix::cli {

// Exit codes. Documented in README.md; keep them stable.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;        // bad flags, config or shape errors
inline constexpr int kInfeasible = 2;   // budget cannot be met
inline constexpr int kNumerical = 3;    // factorization failure (strict mode)
inline constexpr int kNotFound = 4;     // missing file/layer, empty input
inline constexpr int kIntegrity = 5;    // checksum, recount, budget, roundtrip

// `args` excludes the program name. Data goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace deltamix::cli
