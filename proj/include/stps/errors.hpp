#pragma once

#include <stdexcept>
#include <string>

namespace stps {

// Invalid scenario or parameter values supplied by the user.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke a documented precondition (length mismatch, missing links).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// The requested PLS policy cannot be realized with the agent's hardware.
class PolicyInfeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace stps
