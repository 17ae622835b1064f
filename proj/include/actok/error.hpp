#pragma once

#include <stdexcept>
#include <string>

namespace actok {

/// Failure classes. The CLI maps each one to a distinct exit code.
enum class ErrorKind {
  validation,        // precondition or schema violation
  io,                // unreadable / unwritable file
  insufficient_data, // not enough samples for the requested fit
  numerical,         // non-convergence, degenerate fit
  version_mismatch,  // file format_version not understood
  judge,             // consistency judge failed or returned garbage
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorKind::validation, what);
}

}  // namespace actok
