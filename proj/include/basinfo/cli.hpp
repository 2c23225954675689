#pragma once

#include <iosfwd>

namespace basinfo {

/// Operator command line. Exit codes: 0 success, 1 user error, 2 internal error.
int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace basinfo
