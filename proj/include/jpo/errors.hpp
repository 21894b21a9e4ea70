#pragma once

#include <stdexcept>
#include <string>

namespace jpo {

/// Formula evaluated outside its domain (e.g. cos F = 0 in the tuning curves).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid or incomplete configuration. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Integration or detection failure (stiffness guard, NaN, short trajectory).
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Histogram analysis could not produce a result (too few shots, degenerate data, fit failure).
class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace jpo
