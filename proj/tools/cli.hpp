#pragma once

#include <iosfwd>

namespace entropic::cli {

// Exit codes: 0 success, 1 user error (bad syntax, scope violation,
// inapplicable rewrite, bad flags), 2 property failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace entropic::cli
