#pragma once

#include <stdexcept>
#include <string>

namespace detctl {

/// Raised when an argument or configuration violates a documented precondition.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a decay fit cannot be formed (window too short, signal at the floor).
class NoFitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}

}  // namespace detctl
