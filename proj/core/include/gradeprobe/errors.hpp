#pragma once

#include <stdexcept>
#include <string>

namespace gradeprobe {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (dataset files, templates).
class LoadError : public Error {
public:
  using Error::Error;
};

/// Invalid template: missing or duplicated slot, missing verdict words.
class TemplateError : public Error {
public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Invalid configuration value.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// A white-box operation was requested from a black-box grader.
class CapabilityError : public Error {
public:
  using Error::Error;
};

/// Network-level failure after retries were exhausted.
class TransportError : public Error {
public:
  using Error::Error;
};

/// The endpoint answered with a non-success status.
class EndpointError : public Error {
public:
  EndpointError(int status, const std::string& body)
      : Error("endpoint returned status " + std::to_string(status) + ": " + body),
        status_(status),
        body_(body) {}

  int status() const { return status_; }
  const std::string& body() const { return body_; }

private:
  int status_;
  std::string body_;
};

}  // namespace gradeprobe
