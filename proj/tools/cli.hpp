#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace idxlab {

// Runs one command line (without the program name). Returns the process exit
// code: 0 on success, 2 on usage errors, 1 on any other failure, in which case
// a one-line diagnostic goes to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace idxlab
