#pragma once

#include <stdexcept>
#include <string>

namespace brox {

/// Invalid parameters or inconsistent configuration.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A point lies outside the domain of a sampled object (map, environment window).
struct ExtentError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

/// A value lies outside the range of a monotone map.
struct RangeError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

/// Requested time stamp or point is not present in a precomputed table.
struct LookupError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

/// Argument outside the mathematical domain of a formula.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Quadrature could not reach the requested tolerance.
struct AccuracyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Window extension or escalation budget exhausted.
struct ResourceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace brox
