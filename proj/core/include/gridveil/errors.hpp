#pragma once

#include <stdexcept>
#include <string>

namespace gridveil {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class KeyGenerationError : public Error {
 public:
  using Error::Error;
};

/// A plaintext does not fit the positive or negative third of the domain.
class EncodingOverflowError : public Error {
 public:
  using Error::Error;
};

/// A decrypted value landed in the reserved middle third of the domain.
class ArithmeticOverflowError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// A protocol step is missing one of its inputs (share, masked value, coupled term).
class ProtocolIncompleteError : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class InterpolationError : public Error {
 public:
  using Error::Error;
};

class AnalysisPreconditionError : public Error {
 public:
  using Error::Error;
};

class RateBoundError : public Error {
 public:
  using Error::Error;
};

}  // namespace gridveil
