#pragma once

#include <stdexcept>
#include <string>

namespace polyharm {

/// Bad input data or configuration (malformed files, violated preconditions).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical construction could not be completed (no admissible radius,
/// failed reproduction during assembly, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace polyharm
