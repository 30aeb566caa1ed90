#pragma once

#include <stdexcept>
#include <string>

namespace codewave {

// Base for every error the library raises on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem trouble: unreadable directories, missing files, failed writes.
class IoError : public Error {
 public:
  using Error::Error;
};

// A malformed document (index XML, model container, report, wire frame).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed data that breaks a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Caller supplied an impossible combination of settings.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Command-line misuse, including conflicting pipeline flags.
class UsageError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

// Demand store protocol violations (unknown signature, bad message type).
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Store unreachable or connection dropped.
class TransportError : public Error {
 public:
  using Error::Error;
};

}  // namespace codewave
