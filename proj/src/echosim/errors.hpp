#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace echosim {

// Base for every failure the core raises. The C API maps each subclass onto
// one status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Config that fails validate_config; carries every violation.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations)
      : Error(join(violations)), violations_(std::move(violations)) {}
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out = "invalid config";
    for (const auto& s : v) out += "\n  " + s;
    return out;
  }
  std::vector<std::string> violations_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Reply text that does not contain a recognizable stance label.
class ParseFailure : public Error {
 public:
  explicit ParseFailure(std::string raw)
      : Error("no recognizable stance in reply"), raw_(std::move(raw)) {}
  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

// Retry budget exhausted on transient failures (timeouts, 429, 5xx).
class TransportError : public Error {
 public:
  using Error::Error;
};

// Non-retryable request failure (4xx other than 429).
class RequestError : public Error {
 public:
  RequestError(int status, const std::string& what) : Error(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

class DegenerateFit : public Error {
 public:
  using Error::Error;
};

class AlreadyExists : public Error {
 public:
  using Error::Error;
};

}  // namespace echosim
