#ifndef TOPOAUG_ERROR_HPP
#define TOPOAUG_ERROR_HPP

#include <stdexcept>
#include <string>

namespace topoaug {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Label values that are not part of the schema, or a malformed schema.
class SchemaError : public Error {
public:
  using Error::Error;
};

/// Volumes that should share a grid do not.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// Input data that violates an operation's precondition (empty template,
/// constant volume, non-invertible transform, ...).
class DataError : public Error {
public:
  using Error::Error;
};

/// An internal postcondition failed. Seeing one of these is a bug or a
/// topology guarantee that could not be kept for this input.
class InvariantError : public Error {
public:
  using Error::Error;
};

} // namespace topoaug

#endif
