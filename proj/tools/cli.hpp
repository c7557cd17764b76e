#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bless::cli {

enum ExitCode : int {
  kOk = 0,
  kInputError = 2,
  kNotConverged = 3,
  kNonIdentifiableGraph = 4,
  kNoEvidence = 5,
  kPreconditionFailed = 6,
};

/// `args[0]` is the program name. Reads the thread count from BLESS_THREADS.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bless::cli
