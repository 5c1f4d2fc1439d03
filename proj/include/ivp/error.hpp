#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ivp {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vector or matrix dimensions do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Inputs are well-formed but cannot be used as configured
/// (single-class data, empty class, unresolved threshold, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input. `line()` is 1-based, 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + (line ? ":" + std::to_string(line) : std::string()) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Wraps a failure of one pipeline stage; the message is prefixed by the stage name.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error("stage '" + stage + "' failed: " + what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace ivp
