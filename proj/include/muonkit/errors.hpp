#pragma once

#include <stdexcept>
#include <string>

namespace muonkit {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes are incompatible.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input is zero or otherwise carries no usable direction (polar, orth, sketch).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition on a scalar argument does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A NaN or Inf would be stored, or a run produced one.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment configuration. `field()` names the offending key as
/// `section.key`.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace muonkit
