#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace fld {

// Root of every error raised by the library. The CLI maps the subclasses onto
// exit codes (config -> 2, data/format -> 3, numerical -> 4).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public DataError {
 public:
  using DataError::DataError;
};

class FormatError : public DataError {
 public:
  using DataError::DataError;
};

class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, std::ptrdiff_t component = -1)
      : Error(what), component_(component) {}

  // Index of the offending mixture component, or -1 when not attributable.
  std::ptrdiff_t component() const { return component_; }

 private:
  std::ptrdiff_t component_;
};

// Raised when the bandwidth optimization diverges. Carries the objective
// trace up to and including the failing epoch.
class FitError : public NumericalError {
 public:
  FitError(const std::string& what, std::vector<double> trace,
           std::ptrdiff_t component = -1)
      : NumericalError(what, component), trace_(std::move(trace)) {}

  const std::vector<double>& trace() const { return trace_; }

 private:
  std::vector<double> trace_;
};

}  // namespace fld
