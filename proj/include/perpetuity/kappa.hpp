#pragma once

#include "perpetuity/dist.hpp"

namespace perpetuity {

struct KappaResult {
  double kappa = 0.0;
  double residual = 0.0;  // |E[rho^kappa] - 1|
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
};

// Unique positive root of k(s) = E[rho^s] = 1. k is log-convex with k(0) = 1
// and k'(0) = E[log rho] < 0, so the root is isolated by expanding an upper
// bracket until k > 1 and then refined by bisection with secant steps.
//
// Throws DegenerateDriftError when E[log rho] >= 0 and NoRootError when k
// stays at or below 1 on the whole searchable domain.
KappaResult solve_kappa(const RhoFamily& family, double tol = 1e-12);

}  // namespace perpetuity
