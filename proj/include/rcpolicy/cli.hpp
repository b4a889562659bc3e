#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace rcpolicy {

// Runs one CLI invocation (args exclude the program name). Returns 0 on
// success, 1 on a validation error, 2 on a numerical failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rcpolicy
