#pragma once

#include <iosfwd>

namespace rpod {

// Exit codes: 0 success, 1 internal or statistical failure, 2 usage or input error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rpod
