#pragma once

#include <stdexcept>
#include <string>

namespace ivote {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mismatched field parameters, out-of-range sizes, bad counts.
class ParamError : public Error {
 public:
  using Error::Error;
};

/// An argument lies outside the domain an operation is defined on.
class DomainError : public Error {
 public:
  using Error::Error;
};

class NoInverseError : public DomainError {
 public:
  using DomainError::DomainError;
};

class InvalidShareError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Exhaustive computation requested outside the small-field regime.
class RegimeError : public Error {
 public:
  using Error::Error;
};

/// A counterparty stopped participating in an interactive protocol
/// (refusal, broken commitment, malformed challenge). Distinct from a
/// verifier rejecting a signature.
class ProtocolAbort : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ivote
