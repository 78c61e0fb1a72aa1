#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tendon {

/// Simulation state left the admissible region (non-finite values or runaway
/// joint velocity). Raised instead of silently integrating garbage.
class NumericalDivergence : public std::runtime_error {
public:
  explicit NumericalDivergence(const std::string& what, std::ptrdiff_t sample = -1)
      : std::runtime_error(what), sample_(sample) {}

  /// Index of the 100 Hz sample during which divergence was detected, or -1.
  std::ptrdiff_t sample() const noexcept { return sample_; }

private:
  std::ptrdiff_t sample_;
};

class InvalidArchitecture : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class LimitViolation : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

class LengthMismatch : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace tendon
