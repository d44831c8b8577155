#pragma once

#include <stdexcept>
#include <string>

namespace menr {

// Root of the library's error hierarchy.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class InvalidParameterError : public Error {
public:
  explicit InvalidParameterError(const std::string& msg) : Error(msg) {}
};

// Parameter combination the instrument model cannot represent
// (mixed rod lengths, canceling rod configuration, ...).
class UnsupportedConfigurationError : public Error {
public:
  explicit UnsupportedConfigurationError(const std::string& msg) : Error(msg) {}
};

class InsufficientDataError : public Error {
public:
  explicit InsufficientDataError(const std::string& msg) : Error(msg) {}
};

class CalibrationFailedError : public Error {
public:
  explicit CalibrationFailedError(const std::string& msg) : Error(msg) {}
};

class SingularFitError : public Error {
public:
  explicit SingularFitError(const std::string& msg) : Error(msg) {}
};

class UndefinedRatioError : public Error {
public:
  explicit UndefinedRatioError(const std::string& msg) : Error(msg) {}
};

// Config-file problems carry the offending line when known.
class ConfigError : public Error {
public:
  ConfigError(const std::string& msg, int line = 0)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
        line_(line) {}
  int line() const { return line_; }

private:
  int line_;
};

}  // namespace menr
