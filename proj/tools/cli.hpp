#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "changepoint/montecarlo.hpp"

namespace changepoint::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitDegenerate = 3;

/// Runs one command line (args[0] is the program name). Results go to `out`,
/// diagnostics to `err`; the return value is the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Study cells from the key-value simulation config. Keys before the first
/// `[section]` line are shared defaults; every section adds one cell.
std::vector<montecarlo::SimConfig> parse_study_config(std::istream& in,
                                                      const montecarlo::SimConfig& defaults);

} // namespace changepoint::cli
