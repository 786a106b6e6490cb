#pragma once

#include <stdexcept>
#include <string>

namespace confinv {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or jet operands whose dimensions (or variable counts) disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The exact result exists but cannot be written as a sum of rational
/// multiples of powers of pi (e.g. an odd-dimensional sphere whose curvature
/// is not a rational square).
class RepresentationError : public Error {
 public:
  using Error::Error;
};

/// A jet or tensor was requested at a derivative order the input cannot
/// support.
class InsufficientOrder : public Error {
 public:
  using Error::Error;
};

/// Division by zero or a pole at the base point of an evaluation.
class SingularEvaluation : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error("syntax error at line " + std::to_string(line) + ", column " +
              std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

/// Invalid manifold specification document. `path()` is a JSON pointer to
/// the offending element.
class SpecError : public Error {
 public:
  SpecError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace confinv
