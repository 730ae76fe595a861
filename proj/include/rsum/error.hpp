#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rsum {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input record; carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

// Malformed parse tree.
class StructuralError : public Error {
 public:
  using Error::Error;
};

// A precondition the caller was responsible for did not hold.
class ContractError : public Error {
 public:
  using Error::Error;
};

// The remote scorer could not be reached (connection, timeout).
class TransportError : public Error {
 public:
  using Error::Error;
};

// The remote scorer answered, but the answer is unusable.
class ScoringError : public Error {
 public:
  using Error::Error;
};

// Missing upstream stage artifact.
class StageError : public Error {
 public:
  StageError(const std::string& what, std::string required)
      : Error(what), required_(std::move(required)) {}
  const std::string& required_stage() const { return required_; }

 private:
  std::string required_;
};

}  // namespace rsum
