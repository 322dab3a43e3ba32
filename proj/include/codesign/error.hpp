#pragma once

#include <stdexcept>
#include <string>

namespace codesign {

// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed problem file or catalog (duplicate names, ragged columns, ...).
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Unknown module, feature or component name.
class LookupError : public Error {
 public:
  using Error::Error;
};

// log / fractional power of a nonpositive value, unselected required module.
class DomainError : public Error {
 public:
  using Error::Error;
};

// An objective or constraint that no lowering route accepts.
class LoweringError : public Error {
 public:
  using Error::Error;
};

// Enumeration or lifting cap exceeded.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// Expression / constraint text that does not parse.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace codesign
