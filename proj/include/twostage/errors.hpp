#pragma once

#include <stdexcept>
#include <string>

namespace twostage {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument or observation outside its legal domain.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A requested posterior moment does not exist (e.g. inverse Gamma moments
/// with too small a shape).
class MomentError : public Error {
 public:
  using Error::Error;
};

/// Numerical integration failed to reach the requested tolerance.
class OracleFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace twostage
