#pragma once

#include <iosfwd>

namespace dgcl::cli {

// Exit codes: 0 success, 1 runtime failure, 2 usage error.
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// `dgcl <train|eval|ablate|sweep|export-figures> [options]`. Results go to
// `out` (metrics JSON, paths), diagnostics and progress to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dgcl::cli
