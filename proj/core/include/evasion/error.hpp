#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace evasion {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed feature file, manifest, vocabulary or model document.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  explicit ParseError(const std::string& what) : Error(what) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_ = 0;
};

/// A caller broke an operation's precondition (wrong vector length,
/// single-class dataset, sample already benign, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// An add-only / mask constraint on a perturbation was violated.
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// Bad or unresolvable configuration. The CLI maps this to exit code 1.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace evasion
