#pragma once

#include <stdexcept>
#include <string>

namespace phzero {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed document (bad JSON syntax). Carries a 1-based position.
struct ParseError : Error {
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error(what), line(line), column(column) {}
  std::size_t line;
  std::size_t column;
};

/// Well-formed document that does not match the schema.
struct SchemaError : Error {
  SchemaError(const std::string& field, const std::string& what)
      : Error("field '" + field + "': " + what), field(field) {}
  std::string field;
};

/// A file could not be read or written.
struct IOError : Error {
  using Error::Error;
};

/// Operand shapes do not fit together.
struct ShapeError : Error {
  using Error::Error;
};

struct SingularMatrixError : Error {
  using Error::Error;
};

/// The input violates an operation's precondition (ill-posed system, MIMO
/// reduction, exhausted s0 scan, ...).
struct PreconditionError : Error {
  using Error::Error;
};

/// An iterative kernel failed to converge.
struct NumericalError : Error {
  using Error::Error;
};

/// An internal certificate did not hold.
struct ConsistencyError : Error {
  using Error::Error;
};

}  // namespace phzero
