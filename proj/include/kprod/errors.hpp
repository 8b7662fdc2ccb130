#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kprod {

/// Operand sizes disagree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed input: bad JSON, out-of-range parameter, inconsistent spec.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A kernel has a state with zero total mass, so m_{0,1}(x) = 0 and the
/// positivity assumption on mass functions fails at that step.
class AssumptionViolation : public std::runtime_error {
 public:
  AssumptionViolation(const std::string& what, std::size_t state)
      : std::runtime_error(what + " (state " + std::to_string(state) + ")"),
        state_(state) {}

  std::size_t state() const noexcept { return state_; }

 private:
  std::size_t state_;
};

/// A projective step was requested on a measure whose image has zero mass.
class MassAnnihilated : public std::runtime_error {
 public:
  MassAnnihilated() : std::runtime_error("mass annihilated: mu Q = 0") {}
};

/// Every coupling coefficient vanished over the inspected horizon, so no
/// error envelope can be formed.
class NoCoupling : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A scripted environment ran out of kernels.
class EndOfScript : public std::out_of_range {
 public:
  EndOfScript() : std::out_of_range("scripted environment exhausted") {}
};

}  // namespace kprod
