#pragma once

#include <stdexcept>
#include <string>

namespace imcmc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two objects live on different finite spaces.
class SpaceMismatch : public Error {
 public:
  SpaceMismatch(const std::string& what, const std::string& left,
                const std::string& right)
      : Error(what + ": space '" + left + "' does not match '" + right + "'"),
        left_(left),
        right_(right) {}

  const std::string& left() const noexcept { return left_; }
  const std::string& right() const noexcept { return right_; }

 private:
  std::string left_;
  std::string right_;
};

/// A precondition or model invariant was violated by the caller.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed (no contraction, solver failure, disagreement
/// between two evaluation routes).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace imcmc
