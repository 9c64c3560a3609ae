#ifndef ATRL_UTIL_ERRORS_HPP_
#define ATRL_UTIL_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace atrl {

// Shape or size disagreement between operands.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Scenario spec that cannot be realized (e.g. fewer POIs than robots).
class InfeasibleScenario : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or mismatched file content. `field` names the offending entry.
class FormatError : public std::runtime_error {
 public:
  FormatError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace atrl

#endif  // ATRL_UTIL_ERRORS_HPP_
