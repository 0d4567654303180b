#pragma once

#include <stdexcept>
#include <string>

namespace opmdp {

/// Raised when a caller violates an operation's precondition (bad dimensions,
/// non-stochastic rows, out-of-range hyperparameters, ...).
class ContractViolation : public std::invalid_argument {
 public:
  explicit ContractViolation(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when a numerical routine fails on inputs that passed validation.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace opmdp
