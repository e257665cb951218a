#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lungprep::cli {

enum ExitCode : int {
    kSuccess = 0,
    kUsageError = 2,
    kInputError = 3,
    kInternalError = 4,
};

// Runs one command line (args excludes the program name). Machine-readable
// summaries go to `out`, usage text and error messages to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lungprep::cli
