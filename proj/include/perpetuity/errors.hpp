#pragma once

#include <stdexcept>
#include <string>

namespace perpetuity {

// E[rho^s] never crosses 1 on the searchable part of its domain
// (e.g. rho <= 1 almost surely).
class NoRootError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// E[log rho] >= 0: the walk is not negatively drifted.
class DegenerateDriftError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A path simulation exceeded its step cap; usually a mis-set family.
class CapExceededError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A rejection sampler burned its whole budget without one acceptance.
class RejectionBudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A path handed to a functional never reaches the requested truncation level.
class PathTooShortError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The Tauberian check requires kappa < 1.
class KappaNotSubcriticalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace perpetuity
