#pragma once

#include <iosfwd>

namespace denscoint {

/// Entry point of the `denscoint` command line tool. Returns the process exit
/// code: 0 on success, 2 for input errors, 3 for numerical failures.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace denscoint
