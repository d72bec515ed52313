#pragma once

#include <stdexcept>
#include <string>

namespace lhdr {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (shape, range, ordering).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// File contents are malformed: bad magic, truncated payload, checksum mismatch.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A weight bundle does not match the network architecture it is used with.
class WeightMismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// The input carries no usable signal (e.g. an all-zero HDR source).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// Requested exposure cannot be reached within the device limits.
class DeviceLimitError : public Error {
 public:
  using Error::Error;
};

}  // namespace lhdr
