#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace procverify {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ill-typed term construction or substitution.
class TypeError : public Error {
 public:
  using Error::Error;
};

/// A precondition of an operation was violated by the caller.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

class CompositionError : public Error {
 public:
  using Error::Error;
};

/// Expression form that has no finite evaluation (complement).
class UnsupportedExpression : public Error {
 public:
  using Error::Error;
};

/// A configured state/product limit was exceeded.
class ResourceLimit : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& msg, std::size_t line, std::size_t column)
      : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace procverify
