#ifndef UASEP_ERRORS_HPP
#define UASEP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace uasep {

// Invalid argument values or mismatched shapes/rates.
struct ParamError : std::invalid_argument {
  explicit ParamError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Malformed or unsupported file content.
struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// Inconsistent configuration (window/hop combinations, checkpoint vs. pipeline dims).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Input that makes the requested computation meaningless (k > distinct rows, ...).
struct DegenerateError : std::invalid_argument {
  explicit DegenerateError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Metric undefined for the given operands (silent reference etc.).
struct MetricError : std::runtime_error {
  explicit MetricError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace uasep

#endif  // UASEP_ERRORS_HPP
