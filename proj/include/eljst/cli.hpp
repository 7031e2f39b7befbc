#pragma once

#include <iosfwd>

namespace eljst::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitNumericError = 3;

// Entry point for the `eljst` tool: build-graph, train, evaluate, topics, stats.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace eljst::cli
