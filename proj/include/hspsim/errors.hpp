#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hspsim {

// Invalid argument to an operation (negative rate, probability outside [0,1], ...).
class InvalidParameterError : public std::invalid_argument {
public:
  explicit InvalidParameterError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Structurally inconsistent configuration (overlapping gates, peak wider than
// window, mismatched runs, ...).
class ConfigurationError : public std::runtime_error {
public:
  explicit ConfigurationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Estimator asked to divide by a zero count.
class InsufficientDataError : public std::runtime_error {
public:
  explicit InsufficientDataError(const std::string& msg) : std::runtime_error(msg) {}
};

class CalibrationError : public std::runtime_error {
public:
  explicit CalibrationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Analytic prediction outside its validity regime.
class AccuracyError : public std::runtime_error {
public:
  explicit AccuracyError(const std::string& msg) : std::runtime_error(msg) {}
};

class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& msg, std::size_t line)
      : std::runtime_error(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

} // namespace hspsim
