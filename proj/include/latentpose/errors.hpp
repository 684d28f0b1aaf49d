#pragma once

#include <stdexcept>
#include <string>

namespace latentpose {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not conform.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A scalar parameter is outside its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A geometric quantity falls outside a drawable or representable range.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// A mathematical function was evaluated outside its domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A persisted file is malformed, truncated or of the wrong version.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A pipeline stage was run before the stage it depends on.
class DependencyError : public Error {
 public:
  using Error::Error;
};

/// A command refused to run as invoked, e.g. it would overwrite outputs.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace latentpose
