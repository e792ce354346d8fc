#pragma once

#include <iosfwd>

namespace specexec::cli {

// Entry point of the specsim executable. Exit codes: 0 success, 1 usage or
// configuration error, 2 the model has no answer for these inputs.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace specexec::cli
