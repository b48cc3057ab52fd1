#pragma once

#include <stdexcept>
#include <string>

namespace oscar {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid arguments or violated preconditions.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Configuration values out of bounds or unparseable config files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Retryable failure talking to a model backend. `attempts` is the number of
/// tries made before giving up.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, int attempts)
      : Error(what + " (after " + std::to_string(attempts) + " attempt" +
              (attempts == 1 ? "" : "s") + ")"),
        attempts_(attempts) {}

  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

/// The backend answered, but not in the agreed wire format.
class ProtocolError : public Error {
 public:
  ProtocolError(const std::string& what, std::string raw_payload)
      : Error(what), raw_payload_(std::move(raw_payload)) {}

  const std::string& raw_payload() const noexcept { return raw_payload_; }

 private:
  std::string raw_payload_;
};

/// The backend cannot provide a requested capability (e.g. log-probabilities).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

/// A quality-score reply contained no usable number.
class ScoringError : public Error {
 public:
  using Error::Error;
};

/// Malformed preference dataset line.
class DatasetError : public Error {
 public:
  DatasetError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace oscar
