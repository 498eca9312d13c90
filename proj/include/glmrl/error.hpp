#pragma once

#include <stdexcept>
#include <string>

namespace glmrl {

/// Root of every error raised by the library. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite or otherwise unusable numeric input.
class InputDomainError : public Error {
 public:
  using Error::Error;
};

/// Value outside the range a map is defined on (e.g. inverse link).
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Invalid constructor or function parameter.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A link function breaks monotonicity or its declared derivative bounds.
class AssumptionViolation : public Error {
 public:
  using Error::Error;
};

/// The environment produced something it promised not to (non-finite reward, bad action).
class EnvironmentFault : public Error {
 public:
  using Error::Error;
};

/// Episode reward outside [0, 1].
class NormalizationViolation : public Error {
 public:
  using Error::Error;
};

/// The environment has no exact optimal-value oracle.
class UnsupportedOracle : public Error {
 public:
  using Error::Error;
};

/// Random construction failed to produce a valid instance.
class ConstructionError : public Error {
 public:
  using Error::Error;
};

/// A deterministic invariant such as the potential bound failed at runtime.
class InvariantBreach : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace glmrl
