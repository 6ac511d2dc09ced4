#pragma once

#include <stdexcept>
#include <string>

namespace lstmlrp {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A NaN or infinity appeared where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A relevance rule would divide by exactly zero with no stabilizer.
class DivisionHazard : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value (variant gains, training settings, task specs).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or incompatible serialized document.
class ParseError : public Error {
 public:
  using Error::Error;
};

class VersionMismatch : public ParseError {
 public:
  using ParseError::ParseError;
};

class MissingField : public ParseError {
 public:
  using ParseError::ParseError;
};

class DimensionError : public ParseError {
 public:
  using ParseError::ParseError;
};

/// A file could not be opened or written.
class FileError : public Error {
 public:
  using Error::Error;
};

/// Analysis requested on a relevance model that has no root point.
class NoRootError : public Error {
 public:
  using Error::Error;
};

/// An experiment could not gather what it needs (e.g. too few converged models).
class ExperimentError : public Error {
 public:
  using Error::Error;
};

}  // namespace lstmlrp
