#pragma once

#include <stdexcept>
#include <string>

namespace wcw {

enum class ErrorKind {
  InvalidInput,
  ResourceLimit,
  SupportMismatch,
  StepSize,
  Convergence,
  Numeric,
  Config,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::ResourceLimit: return "resource-limit";
    case ErrorKind::SupportMismatch: return "support-mismatch";
    case ErrorKind::StepSize: return "step-size";
    case ErrorKind::Convergence: return "convergence";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Config: return "config";
  }
  return "unknown";
}

/// Every failure raised by the library carries a machine-readable category.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorKind::InvalidInput, what);
}

}  // namespace wcw
