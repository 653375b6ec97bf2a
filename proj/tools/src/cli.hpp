#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qcomp::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kInputError = 2, kMissingPrerequisite = 3, kBackendError = 4 };

// Runs one qcomp invocation. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace qcomp::cli
