#pragma once

#include <iosfwd>

namespace todsim {

// Entry point of the todsim tool. Returns the process exit status; output
// goes to `out`, diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace todsim
