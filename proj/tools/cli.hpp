#pragma once

#include <iosfwd>

namespace rebot::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitCheckpointMismatch = 2,
  kExitBadData = 3,
  kExitPairing = 4,
};

// Entry point shared by the executable and the tests. Results go to `out`,
// diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rebot::cli
