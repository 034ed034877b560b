#pragma once

#include <stdexcept>
#include <string>

namespace tomo {

/// Base class for every error raised by the library. The CLI maps any of
/// these to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define TOMO_DEFINE_ERROR(Name)          \
  class Name : public Error {            \
   public:                               \
    using Error::Error;                  \
  }

TOMO_DEFINE_ERROR(InputError);
TOMO_DEFINE_ERROR(DegenerateFitError);
TOMO_DEFINE_ERROR(BracketError);
TOMO_DEFINE_ERROR(ContractError);
TOMO_DEFINE_ERROR(EmptySectionError);
TOMO_DEFINE_ERROR(ApexError);
TOMO_DEFINE_ERROR(ProjectionOverflowError);
TOMO_DEFINE_ERROR(SamplingError);
TOMO_DEFINE_ERROR(GeometryError);
TOMO_DEFINE_ERROR(ContainmentError);
TOMO_DEFINE_ERROR(NestingError);
TOMO_DEFINE_ERROR(SpecError);
TOMO_DEFINE_ERROR(SolverError);
TOMO_DEFINE_ERROR(UnsupportedError);

#undef TOMO_DEFINE_ERROR

/// Configuration problem anchored to a line of the input file (line is
/// 1-based; 0 means the location is unknown).
class ConfigError : public Error {
 public:
  ConfigError(const std::string& message, int line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace tomo
