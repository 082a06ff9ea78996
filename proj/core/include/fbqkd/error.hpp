#pragma once

#include <stdexcept>
#include <string>

namespace fbqkd {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument does not hold.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Not enough data to form the requested estimate (empty basis, zero background, ...).
class InsufficientData : public Error {
 public:
  using Error::Error;
};

/// Timestamp stream is not sorted in time.
class StreamOrderError : public Error {
 public:
  using Error::Error;
};

/// Fringe samples cannot constrain the fit (flat intensity, too few points).
class UnfittableData : public Error {
 public:
  using Error::Error;
};

/// Tomography records do not span the operator space.
class IncompleteData : public Error {
 public:
  using Error::Error;
};

/// Configuration file is malformed or violates an invariant.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace fbqkd
