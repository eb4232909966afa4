#pragma once

#include <stdexcept>
#include <string>

namespace gnsch {

// Each failure mode the solver can report. The CLI maps these onto exit codes.
enum class ErrorKind {
  Domain,            // argument outside the domain of a closure (log of c<=0, ...)
  InvalidArgument,   // shape/axis/dimension mismatch
  Config,            // bad configuration key or value
  Cfl,               // CFL-like condition violated
  Positivity,        // density lost positivity
  Bound,             // mass fraction left (0,1), or xi left (0,2)
  StepSize,          // SAV guard failed (negative r numerator)
  Solver,            // linear solver failure
  TooManyHalvings,   // dt retry loop exhausted
  Io,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::Domain: return "domain";
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::Config: return "config";
    case ErrorKind::Cfl: return "cfl";
    case ErrorKind::Positivity: return "positivity";
    case ErrorKind::Bound: return "bound";
    case ErrorKind::StepSize: return "step-size";
    case ErrorKind::Solver: return "solver";
    case ErrorKind::TooManyHalvings: return "too-many-halvings";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// True for failures that signal a broken structural property of the scheme
  /// (as opposed to bad input).
  bool is_invariant_violation() const noexcept {
    return kind_ != ErrorKind::Config && kind_ != ErrorKind::InvalidArgument &&
           kind_ != ErrorKind::Io;
  }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace gnsch
