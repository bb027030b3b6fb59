#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace covkit {

enum class ErrorCode {
  InvalidArgument,
  InvalidPolygon,
  DuplicateSites,
  SiteOutsideWorkspace,
  EvalOutsideSupport,
  KernelMismatch,
  NonMonotoneDescent,
  NoConvergence,
  InfeasibleShape,
  SupportViolation,
  SizeLimit,
  SearchSpaceTooLarge,
  Io,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidPolygon: return "InvalidPolygon";
    case ErrorCode::DuplicateSites: return "DuplicateSites";
    case ErrorCode::SiteOutsideWorkspace: return "SiteOutsideWorkspace";
    case ErrorCode::EvalOutsideSupport: return "EvalOutsideSupport";
    case ErrorCode::KernelMismatch: return "KernelMismatch";
    case ErrorCode::NonMonotoneDescent: return "NonMonotoneDescent";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::InfeasibleShape: return "InfeasibleShape";
    case ErrorCode::SupportViolation: return "SupportViolation";
    case ErrorCode::SizeLimit: return "SizeLimit";
    case ErrorCode::SearchSpaceTooLarge: return "SearchSpaceTooLarge";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// Numerical failures (as opposed to bad input) map to a distinct CLI exit code.
  bool is_numerical() const noexcept {
    return code_ == ErrorCode::NonMonotoneDescent || code_ == ErrorCode::NoConvergence ||
           code_ == ErrorCode::SupportViolation || code_ == ErrorCode::EvalOutsideSupport;
  }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace covkit
