#pragma once

#include <stdexcept>
#include <string>

namespace krabc {

// Precondition violated by the caller (bad sizes, empty inputs, invalid config values).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A parameter point outside the simulator's admissible domain (e.g. a
// non-positive-definite scale matrix). Drivers treat it like a diverged run.
class InvalidParameter : public ContractViolation {
 public:
  using ContractViolation::ContractViolation;
};

class SimulationDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Median heuristic collapsed to zero; the caller decides on a fallback.
class DegenerateBandwidth : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SelectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace krabc
