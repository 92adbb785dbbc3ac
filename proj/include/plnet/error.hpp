#pragma once

#include <stdexcept>
#include <string>

namespace plnet {

/// Operand dimensions do not fit the operation.
class ShapeError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// A caller-supplied value is outside the operation's domain.
class ArgumentError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// A least squares design matrix is rank deficient.
class DegenerateDesignError : public ArgumentError {
  public:
    using ArgumentError::ArgumentError;
};

/// Malformed input data (CSV rows, model documents, config files).
class ParseError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Invalid run configuration (unknown preset, bad field value, ...).
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Training produced a non-finite loss or gradient.
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace plnet
