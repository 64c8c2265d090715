#pragma once

#include <stdexcept>
#include <string>

namespace modarc {

// Failure categories. The CLI maps each one to a distinct exit code.
enum class ErrorCategory {
  config = 2,
  io = 3,
  parse = 4,
  invalid_action = 5,
  episode_finished = 6,
  shape = 7,
  numeric = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCategory::config, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCategory::io, what) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, long line)
      : Error(ErrorCategory::parse, "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  long line() const noexcept { return line_; }

 private:
  long line_;
};

class InvalidActionError : public Error {
 public:
  explicit InvalidActionError(const std::string& what)
      : Error(ErrorCategory::invalid_action, what) {}
};

class EpisodeFinishedError : public Error {
 public:
  explicit EpisodeFinishedError(const std::string& what)
      : Error(ErrorCategory::episode_finished, what) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(ErrorCategory::shape, what) {}
};

class NumericError : public Error {
 public:
  NumericError(const std::string& what, int layer)
      : Error(ErrorCategory::numeric, what + " (layer " + std::to_string(layer) + ")"),
        layer_(layer) {}
  int layer() const noexcept { return layer_; }

 private:
  int layer_;
};

}  // namespace modarc
