#pragma once

#include <iosfwd>

#include "actok/error.hpp"

namespace actok::cli {

/// Process exit codes.
enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kIo = 2,
  kValidation = 3,
  kInsufficientData = 4,
  kNumerical = 5,
  kVersionMismatch = 6,
  kJudge = 7,
};

int exit_code(ErrorKind kind);

/// Runs the `actok` command line. Machine-readable summaries go to `out`,
/// logs and errors to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace actok::cli
