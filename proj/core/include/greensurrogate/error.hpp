#pragma once

#include <stdexcept>
#include <string>

namespace gsurr {

/// Broad failure classes. The CLI maps these onto process exit codes.
enum class ErrorKind {
  invalid_argument,  // caller passed something outside an operation's domain
  config,            // malformed or inconsistent run configuration
  io,                // file missing, truncated, corrupt, or unwritable
  divergence,        // training produced non-finite values
  numeric,           // singular system, failed factorization
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, const std::string& what) {
  if (!condition) fail(ErrorKind::invalid_argument, what);
}

}  // namespace gsurr
