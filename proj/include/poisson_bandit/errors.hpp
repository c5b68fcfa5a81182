#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace poisson_bandit {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

/// The observed statistic has zero probability under every atom of the prior.
class ImpossibleObservation : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Invalid solver or run configuration.
class ConfigError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed configuration or data file; carries the 1-based line number.
class ParseError : public std::runtime_error {
  public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

/// Strategy table does not cover a state that the evaluation reaches.
class StrategyError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace poisson_bandit
