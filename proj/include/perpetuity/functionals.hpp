#pragma once

#include <optional>

#include "perpetuity/dist.hpp"
#include "perpetuity/paths.hpp"

namespace perpetuity {

enum class FunctionalKind { M, MB, M1, M2, R, RB, Z, KI };

struct FunctionalSample {
  FunctionalKind kind;
  double value = 0.0;
  double trunc_level = 0.0;        // A; +infinity when untruncated
  double trunc_error_bound = 0.0;  // declared bound on what truncation dropped
  double eps_bias = 0.0;           // conditioning bias inherited from the paths
};

// Mean residual multiplier c_geom: the sum dropped by truncating an
// exponential series at level A is, on average, about c_geom * e^{-A}.
// Estimated once per family by simulating both branch types past a probe
// level and averaging e^{A_probe} times the realized residual.
struct TruncationCalibration {
  double c_geom = 2.0;
};
TruncationCalibration calibrate_truncation(const RhoFamily& family, double kappa,
                                           std::size_t n, RngStream& rng,
                                           long cap = kDefaultStepCap);

// M = sum_{i<0} e^{-V_i} + sum_{j>=0} e^{-V_j} truncated at level A: each
// branch contributes its terms strictly before the first value exceeding A.
// Requires the stay_nonneg / stay_positive certificates and that both
// branches actually reach past A (PathTooShortError otherwise).
FunctionalSample compute_M(const WalkPath& left, const WalkPath& right, double A,
                           const TruncationCalibration& calib = {});

// Same with every term multiplied by an independent draw of B.
FunctionalSample compute_MB(const WalkPath& left, const WalkPath& right, double A,
                            const BFamily& bfam, RngStream& rng,
                            const TruncationCalibration& calib = {});

// Stopping rule for accumulating R = sum e^{V_n} to a certified relative
// tolerance: the remaining sum is e^{V_n} times a fresh copy of R, and
// moment bounds E[R^s] <= 1/(1-k(s)) (s <= 1) or (1-k(s)^{1/s})^{-s}
// (s in (1, kappa)) give P(remaining > rel_tol * accumulated) <= eps_cert
// once V_n <= log(rel_tol * accumulated) + offset.
struct RStoppingRule {
  double offset = 0.0;  // (1/s*) log(eps_cert / bound_{R,s*})
  double s_star = 0.0;
  double rel_tol = 0.0;
  double eps_cert = 0.0;
};
RStoppingRule make_r_stopping_rule(const RhoFamily& family, double kappa, double rel_tol,
                                   double eps_cert,
                                   const std::optional<BFamily>& bfam = std::nullopt);

FunctionalSample compute_R(const RhoFamily& family, RngStream& rng, const RStoppingRule& rule,
                           long cap = kDefaultStepCap);
FunctionalSample compute_RB(const RhoFamily& family, const BFamily& bfam, RngStream& rng,
                            const RStoppingRule& rule, long cap = kDefaultStepCap);

// Z = e^H Mbar_1 Mbar_2 on a conditioned-I sample, with the truncation
// windows: Mbar_1 keeps k in [t1-, t1+] where t1- is the innermost left index
// with V >= A and t1+ = (first right index with V >= A) clamped to T_H;
// Mbar_2 keeps k in [t2-, t2+] where the depth H - V_k first reaches A on
// each side of T_H. A = +infinity keeps everything simulated.
struct ZParts {
  FunctionalSample z;
  FunctionalSample m1;
  FunctionalSample m2;
};
ZParts compute_Z(const ConditionedISample& sample, double A,
                 const TruncationCalibration& calib = {});

// KI = sum_{0<=k<=T_neg} e^{V_k}; exact, no truncation.
FunctionalSample compute_KI(const ExcursionRecord& ex);

}  // namespace perpetuity
