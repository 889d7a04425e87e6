#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kccsd {

/// Precondition failure: a caller passed arguments outside an operation's domain.
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A density lacks a capability an operation needs (sampler, log density).
class CapabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The requested kernel/model combination has no implementation (e.g. closed
/// form expectations for an IMQ kernel).
class UnsupportedCombination : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bandwidth selection collapsed to zero.
class DegenerateBandwidth : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite intermediate values.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration; the message names the offending field.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed input file. `line()` is 1-based, 0 when not line oriented.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

namespace detail {

inline void require(bool condition, const char* message) {
  if (!condition) throw ContractViolation(message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace detail
}  // namespace kccsd
