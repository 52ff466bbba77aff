#pragma once

#include <stdexcept>
#include <string>

namespace tfn {

enum class ErrorKind {
  DimensionMismatch,
  AbsoluteContinuity,
  Uncovered,
  UngeneratedLevel,
  Inconsistent,
  InvalidInput,
  CheckFailed,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "dimension_mismatch";
    case ErrorKind::AbsoluteContinuity: return "absolute_continuity";
    case ErrorKind::Uncovered: return "uncovered_support";
    case ErrorKind::UngeneratedLevel: return "ungenerated_level";
    case ErrorKind::Inconsistent: return "inconsistent";
    case ErrorKind::InvalidInput: return "invalid_input";
    case ErrorKind::CheckFailed: return "check_failed";
  }
  return "unknown";
}

/// Workspace error. Every failure path in the library throws this (or a
/// subclass carrying a diagnostic report) with a message naming the
/// violated invariant.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace tfn
