#pragma once

#include <iosfwd>

namespace spikecore::cli {

/// Exit codes: 0 success, 1 a diff found a divergence, 2 any error
/// (including bad arguments).
inline constexpr int kExitOk = 0;
inline constexpr int kExitDiverged = 1;
inline constexpr int kExitError = 2;

/// Runs one command line. Defaults come from the JSON file named by the
/// SPIKECORE_CONFIG environment variable when it is set; flags override them.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace spikecore::cli
