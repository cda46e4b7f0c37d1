#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace xband {

// Constellation order that cannot be realized (non-square QAM, M < 2 PAM, ...).
struct InvalidOrder : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of an operation.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Inconsistent experiment / detector configuration.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// CSV inputs that cannot be aligned or parsed.
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainingFailure : std::runtime_error {
  TrainingFailure(const std::string& what, std::size_t step)
      : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step(step) {}
  std::size_t step;
};

}  // namespace xband
