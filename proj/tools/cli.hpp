#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace nilrec::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2, kBoundBreach = 3 };

// args excludes the program name. Reports go to the output directory; short
// results go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nilrec::cli
