#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace blender::cli {

enum ExitCode : int {
  kOk = 0,
  kInputError = 1,
  kCertificateFailure = 2,
  kMarginError = 3,  // admissibility, margin and broken connections
};

// Runs one command line; args excludes the program name. Documents go to
// `out` (or to --output), diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace blender::cli
