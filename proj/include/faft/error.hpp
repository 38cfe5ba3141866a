#pragma once

#include <stdexcept>
#include <string>

namespace faft {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the domain of a function (e.g. spline evaluated off its interval).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent shapes or invalid construction arguments.
class StructureError : public Error {
 public:
  using Error::Error;
};

class UnsupportedOperation : public Error {
 public:
  using Error::Error;
};

/// Bad configuration values or unparseable config files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Optimizer or harness failed to reach a usable optimum.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Observed information is not positive definite.
class SingularInformation : public Error {
 public:
  SingularInformation(const std::string& what, double eigenvalue)
      : Error(what), eigenvalue_(eigenvalue) {}
  double eigenvalue() const noexcept { return eigenvalue_; }

 private:
  double eigenvalue_;
};

/// Archive file is unreadable, corrupted or from an incompatible version.
class ArchiveError : public Error {
 public:
  using Error::Error;
};

}  // namespace faft
