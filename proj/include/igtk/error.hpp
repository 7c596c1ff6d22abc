#pragma once

#include <stdexcept>
#include <string>

namespace igtk {

// Broad error classes. The CLI maps validation errors to exit code 1 and
// runtime errors to exit code 2.
enum class ErrorKind {
  parse,
  integrity,
  domain,
  config,
  format,
  shape,
  precondition,
  usage,
  numeric,
  training,
  evaluation,
  projection,
  io,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parse: return "parse error";
    case ErrorKind::integrity: return "integrity error";
    case ErrorKind::domain: return "domain error";
    case ErrorKind::config: return "config error";
    case ErrorKind::format: return "format error";
    case ErrorKind::shape: return "shape error";
    case ErrorKind::precondition: return "precondition violation";
    case ErrorKind::usage: return "usage error";
    case ErrorKind::numeric: return "numeric error";
    case ErrorKind::training: return "training error";
    case ErrorKind::evaluation: return "evaluation error";
    case ErrorKind::projection: return "projection error";
    case ErrorKind::io: return "I/O error";
  }
  return "error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  bool is_validation() const noexcept {
    switch (kind_) {
      case ErrorKind::parse:
      case ErrorKind::integrity:
      case ErrorKind::domain:
      case ErrorKind::config:
      case ErrorKind::format:
      case ErrorKind::shape:
      case ErrorKind::precondition:
      case ErrorKind::usage:
        return true;
      default:
        return false;
    }
  }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) fail(kind, what);
}

}  // namespace igtk
