#include "perpetuity/kappa.hpp"

#include <cmath>
#include <limits>

#include "perpetuity/errors.hpp"

namespace perpetuity {

namespace {

constexpr double kBoundaryGap = 1e-9;  // stay inside the Beta-function domain
constexpr double kMaxS = 1e6;          // expansion cutoff for unbounded domains

}  // namespace

KappaResult solve_kappa(const RhoFamily& family, double tol) {
  if (!(family.mean_log() < 0.0)) {
    throw DegenerateDriftError("solve_kappa: E[log rho] >= 0");
  }
  const double domain_sup = std::min(family.moment_domain_sup() - kBoundaryGap, kMaxS);
  // f(s) = log E[rho^s]: f(0) = 0, f'(0) < 0, convex. Root-find on f rather
  // than k itself for conditioning.
  const auto f = [&](double s) { return family.log_moment(s); };

  // A point with f < 0 exists arbitrarily close to 0; walk down until found.
  double lo = std::min(1.0, domain_sup / 2.0);
  int guard = 0;
  while (!(f(lo) < 0.0)) {
    lo /= 2.0;
    if (++guard > 120) throw NoRootError("solve_kappa: could not find f(s) < 0 near 0");
  }

  // Expand upward until f > 0. For BetaRatio, f blows up at the domain edge,
  // so approach it geometrically instead of stepping past it.
  double strict_neg = lo;  // last point with f < 0 strictly
  double hi = lo;
  double fhi = f(hi);
  guard = 0;
  while (fhi <= 0.0) {
    if (fhi < 0.0) strict_neg = hi;
    double next = 2.0 * hi;
    if (next >= domain_sup) next = hi + 0.5 * (domain_sup - hi);
    if (next <= hi || next > kMaxS || (domain_sup - next) < 1e-14 * domain_sup) {
      throw NoRootError("solve_kappa: E[rho^s] <= 1 on the whole domain");
    }
    lo = hi;
    hi = next;
    fhi = f(hi);
    if (++guard > 400) throw NoRootError("solve_kappa: bracket expansion failed");
  }

  const double bracket_lo = strict_neg;
  const double bracket_hi = hi;
  double flo = f(lo);
  // The expansion grid can land on the root exactly (integer kappa); the
  // reported bracket still strictly contains it.
  if (flo == 0.0) return KappaResult{lo, 0.0, bracket_lo, bracket_hi};
  double s = 0.5 * (lo + hi);
  double residual = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 200; ++it) {
    // Secant through the bracket endpoints, midpoint when it falls outside.
    double cand = lo - flo * (hi - lo) / (fhi - flo);
    if (!(cand > lo && cand < hi)) cand = 0.5 * (lo + hi);
    const double fc = f(cand);
    s = cand;
    residual = std::abs(std::expm1(fc));
    if (residual <= tol || hi - lo <= 1e-15 * std::max(1.0, hi)) break;
    if (fc < 0.0) {
      lo = cand;
      flo = fc;
    } else {
      hi = cand;
      fhi = fc;
    }
  }
  return KappaResult{s, residual, bracket_lo, bracket_hi};
}

}  // namespace perpetuity
