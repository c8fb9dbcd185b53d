#pragma once

#include <stdexcept>
#include <string>

namespace heppcat {

enum class ErrorKind {
  usage,       // bad arguments or inconsistent dimensions
  domain,      // argument outside the function's domain (e.g. v <= 0)
  numerical,   // solver breakdown
  degenerate,  // data cannot support the requested model
  io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Numerical failure inside the fitter, tagged with the iteration it hit.
class IterationError : public Error {
 public:
  IterationError(int iteration, const Error& cause)
      : Error(cause.kind(), "iteration " + std::to_string(iteration) + ": " + cause.what()),
        iteration_(iteration) {}

  int iteration() const noexcept { return iteration_; }

 private:
  int iteration_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorKind::usage, what);
}

}  // namespace heppcat
