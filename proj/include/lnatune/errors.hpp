#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lnatune {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the operation's domain (bad index, non-finite input, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Caller violated an interface contract (missing known combo, mismatched protocol).
class ContractError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. `line()` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class FileError : public Error {
 public:
  using Error::Error;
};

/// Bad command-line or run-configuration value.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace lnatune
