#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ftopt {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised by enumeration when the number of reduced graphs would exceed the cap.
class EnumerationBudgetExceeded : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class TooFewValues : public Error {
 public:
  using Error::Error;
};

class IncompatibleScenario : public Error {
 public:
  using Error::Error;
};

class TraceMismatch : public Error {
 public:
  using Error::Error;
};

class ReconstructionFailed : public Error {
 public:
  using Error::Error;
};

class IndexOutOfRange : public Error {
 public:
  using Error::Error;
};

class NotConverged : public Error {
 public:
  NotConverged(const std::string& what, double residual) : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class InvalidParams : public Error {
 public:
  using Error::Error;
};

class CurvatureUnsupported : public Error {
 public:
  using Error::Error;
};

// line == 0 when the position is unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace ftopt
