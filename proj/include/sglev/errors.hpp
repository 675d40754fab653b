#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sglev {

enum class ErrorCode {
  parse,
  validation,
  domain,
  non_confining,
  no_convergence,
  non_finite,
  schedule_misaligned,
  bracket_invalid,
  grid_mismatch,
  io,
};

constexpr std::string_view to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::parse: return "ParseError";
    case ErrorCode::validation: return "ValidationError";
    case ErrorCode::domain: return "DomainError";
    case ErrorCode::non_confining: return "NonConfining";
    case ErrorCode::no_convergence: return "NoConvergence";
    case ErrorCode::non_finite: return "NonFinite";
    case ErrorCode::schedule_misaligned: return "ScheduleMisaligned";
    case ErrorCode::bracket_invalid: return "BracketInvalid";
    case ErrorCode::grid_mismatch: return "GridMismatch";
    case ErrorCode::io: return "IoError";
  }
  return "Error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), message_(what) {}

  ErrorCode code() const noexcept { return code_; }
  // Text without the error-kind prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

// Process exit status for the command-line tool.
constexpr int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::parse:
    case ErrorCode::validation:
    case ErrorCode::domain:
    case ErrorCode::bracket_invalid:
    case ErrorCode::schedule_misaligned:
      return 2;
    case ErrorCode::io:
      return 4;
    default:
      return 3;
  }
}

} // namespace sglev
