#pragma once

#include <stdexcept>
#include <string>

namespace tvinr {

struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& m) : std::runtime_error("shape error: " + m) {}
};

struct ParseError : std::runtime_error {
  ParseError(const std::string& m, long line)
      : std::runtime_error("parse error at line " + std::to_string(line) + ": " + m), line(line) {}
  long line;
};

struct InvalidSplitError : std::runtime_error {
  explicit InvalidSplitError(const std::string& m) : std::runtime_error("invalid split: " + m) {}
};

struct InsufficientDataError : std::runtime_error {
  explicit InsufficientDataError(const std::string& m)
      : std::runtime_error("insufficient data: " + m) {}
};

struct EmptyContextError : std::runtime_error {
  explicit EmptyContextError(const std::string& m) : std::runtime_error("empty context: " + m) {}
};

struct DivergenceError : std::runtime_error {
  explicit DivergenceError(const std::string& m) : std::runtime_error("divergence: " + m) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& m) : std::runtime_error("config error: " + m) {}
};

struct ModeMismatchError : std::runtime_error {
  explicit ModeMismatchError(const std::string& m) : std::runtime_error("mode mismatch: " + m) {}
};

}  // namespace tvinr
