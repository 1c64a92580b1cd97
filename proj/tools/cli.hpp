#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace demcorrect::cli {

/// Runs one command line (args excludes the program name). Returns the process
/// exit code: 0 success, 1 internal error, 2 configuration or input error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace demcorrect::cli
