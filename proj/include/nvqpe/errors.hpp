#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace nvqpe {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A DetectionModel lacks the arrival-time bins an operation needs.
class UnconfiguredBinsError : public Error {
 public:
  UnconfiguredBinsError() : Error("detection model has no arrival-time bins configured") {}
};

/// The posterior lost all its mass (every grid point has zero likelihood).
class DegeneratePosteriorError : public Error {
 public:
  using Error::Error;
};

/// The circular resultant of a posterior vanished, so its argument is undefined.
class AmbiguousEstimateError : public Error {
 public:
  using Error::Error;
};

/// The rate-equation integrator produced a non-finite state.
class IntegrationError : public Error {
 public:
  using Error::Error;
};

/// An argument fell outside the admissible range of an operation.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Invalid user configuration; `field` names the offending key path.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace nvqpe
