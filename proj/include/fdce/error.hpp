#pragma once

#include <stdexcept>
#include <string>

namespace fdce {

enum class ErrorKind {
  InvalidDimension,
  DegenerateData,
  NumericalConditioning,
  UnsupportedConfiguration,
  DegenerateGrid,
  TrainingDiverged,
  Parse,
  Configuration,
  Validation,
  Io,
};

const char* to_string(ErrorKind kind) noexcept;

// All library failures are reported through this one exception type; callers
// switch on kind() (the CLI maps kinds to exit codes).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidDimension: return "invalid dimension";
    case ErrorKind::DegenerateData: return "degenerate data";
    case ErrorKind::NumericalConditioning: return "numerical conditioning";
    case ErrorKind::UnsupportedConfiguration: return "unsupported configuration";
    case ErrorKind::DegenerateGrid: return "degenerate grid";
    case ErrorKind::TrainingDiverged: return "training diverged";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Configuration: return "configuration error";
    case ErrorKind::Validation: return "validation error";
    case ErrorKind::Io: return "I/O error";
  }
  return "error";
}

}  // namespace fdce
