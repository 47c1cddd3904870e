#pragma once

#include <iosfwd>

namespace diswot::cli {

// Runs the command line tool. Returns the process exit code: 0 on success,
// 1 on a data or runtime error, 2 on a usage error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace diswot::cli
