#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace eqodds {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParameterError : public Error {
 public:
  using Error::Error;
};

// A (y, a) cell with no samples (or no mass) where one is required.
class EmptyCellError : public Error {
 public:
  EmptyCellError(int y, int a, const std::string& context = "")
      : Error("empty cell (y=" + std::to_string(y) + ", a=" + std::to_string(a) + ")" +
              (context.empty() ? "" : " in " + context)),
        y_(y),
        a_(a) {}
  int y() const { return y_; }
  int a() const { return a_; }

 private:
  int y_;
  int a_;
};

class TooFewSamplesError : public Error {
 public:
  using Error::Error;
};

// Raised when a concentration bound is requested below its sample-size precondition.
class PreconditionUnmetError : public Error {
 public:
  PreconditionUnmetError(const std::string& what, std::int64_t min_n)
      : Error(what + " (requires n >= " + std::to_string(min_n) + ")"), min_n_(min_n) {}
  std::int64_t min_n() const { return min_n_; }

 private:
  std::int64_t min_n_;
};

class SingularCovarianceError : public Error {
 public:
  explicit SingularCovarianceError(double eigenvalue)
      : Error("covariance of [X;A] is not positive definite (eigenvalue " +
              std::to_string(eigenvalue) + ")"),
        eigenvalue_(eigenvalue) {}
  double eigenvalue() const { return eigenvalue_; }

 private:
  double eigenvalue_;
};

class DegenerateDenominatorError : public Error {
 public:
  explicit DegenerateDenominatorError(double denominator)
      : Error("derived correction denominator vanishes (" + std::to_string(denominator) + ")"),
        denominator_(denominator) {}
  double denominator() const { return denominator_; }

 private:
  double denominator_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& column)
      : Error("missing required column '" + column + "'"), column_(column) {}
  const std::string& column() const { return column_; }

 private:
  std::string column_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace eqodds
