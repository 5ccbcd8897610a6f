#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dtp::cli {

// Runs one CLI invocation (args exclude the program name). Returns the
// process exit code: 0 success, 1 usage error, 2 data/model error.
int cli_dispatch(const std::vector<std::string>& args, std::ostream& out,
                 std::ostream& err);

}  // namespace dtp::cli
