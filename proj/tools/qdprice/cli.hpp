#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qdp::cli {

// Runs the qdprice command-line tool on `args` (program name excluded),
// writing tables and progress to `out` and usage errors to `err`. Returns
// the process exit code. Exposed as a function so tests can drive the
// tool in-process.
int run_cli(std::vector<std::string> args, std::ostream& out,
            std::ostream& err);

}  // namespace qdp::cli
