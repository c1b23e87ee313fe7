#pragma once

#include <stdexcept>
#include <string>

namespace gamc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

class DowndateBreaksPositivity : public Error {
 public:
  using Error::Error;
};

class NonFiniteInput : public Error {
 public:
  using Error::Error;
};

/// A function or one of its partial derivatives is not finite at the
/// evaluation point.
class NonFiniteValue : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  using Error::Error;
};

class InvalidParams : public Error {
 public:
  using Error::Error;
};

/// The position-dependent metric could not be made positive definite.
/// Samplers turn this into an automatic rejection.
class MetricFailure : public Error {
 public:
  using Error::Error;
};

class NonFiniteGradient : public Error {
 public:
  using Error::Error;
};

class DegenerateChain : public Error {
 public:
  using Error::Error;
};

class TargetError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ParseError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Validation failure; the message is prefixed with the offending field path.
class ValidationError : public ConfigError {
 public:
  ValidationError(const std::string& field, const std::string& what)
      : ConfigError(field + ": " + what), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class IOError : public Error {
 public:
  using Error::Error;
};

}  // namespace gamc
