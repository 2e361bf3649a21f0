#pragma once

#include <stdexcept>
#include <string>

namespace msvm2 {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments or preconditions: wrong dimensions, invalid kernel
/// parameters, a single-category training set.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The numerics failed: the solver did not converge, the Gram matrix is not
/// positive semidefinite, or the hard-margin dual is unbounded.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed input document (dataset file or model file).
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what, std::string field = {})
      : Error(what), field_(std::move(field)) {}

  /// Name of the offending field or `line N`; empty when not applicable.
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace msvm2
