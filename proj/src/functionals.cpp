#include "perpetuity/functionals.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "perpetuity/errors.hpp"

namespace perpetuity {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Sum of e^{-v} over values strictly before the first one exceeding A,
// starting at index `from`. Throws when the path never exceeds a finite A.
double truncated_exp_sum(const std::vector<double>& values, std::size_t from, double A,
                         const char* what, const BFamily* bfam = nullptr,
                         RngStream* rng = nullptr) {
  double acc = 0.0;
  for (std::size_t i = from; i < values.size(); ++i) {
    if (values[i] > A) return acc;
    const double b = bfam ? bfam->sample(*rng) : 1.0;
    acc += b * std::exp(-values[i]);
  }
  if (std::isinf(A)) return acc;
  throw PathTooShortError(what);
}

void require_branches(const WalkPath& left, const WalkPath& right) {
  if (left.certificate != Certificate::stay_nonneg) {
    throw std::invalid_argument("compute_M: left branch must carry the stay_nonneg certificate");
  }
  if (right.certificate != Certificate::stay_positive) {
    throw std::invalid_argument(
        "compute_M: right branch must carry the stay_positive certificate");
  }
}

FunctionalSample m_like(const WalkPath& left, const WalkPath& right, double A,
                        const TruncationCalibration& calib, const BFamily* bfam,
                        RngStream* rng) {
  require_branches(left, right);
  // Left terms are i < 0 only; index 0 holds V_0 which belongs to the right sum.
  const double left_sum =
      truncated_exp_sum(left.values, 1, A, "compute_M: left branch never exceeds A", bfam, rng);
  const double right_sum = truncated_exp_sum(
      right.values, 0, A, "compute_M: right branch never exceeds A", bfam, rng);
  const double mean_b = bfam ? bfam->mean() : 1.0;
  FunctionalSample out;
  out.kind = bfam ? FunctionalKind::MB : FunctionalKind::M;
  out.value = left_sum + right_sum;
  out.trunc_level = A;
  out.trunc_error_bound = std::exp(-A) * calib.c_geom * mean_b;
  out.eps_bias = std::max(left.eps_bias, right.eps_bias);
  return out;
}

}  // namespace

FunctionalSample compute_M(const WalkPath& left, const WalkPath& right, double A,
                           const TruncationCalibration& calib) {
  return m_like(left, right, A, calib, nullptr, nullptr);
}

FunctionalSample compute_MB(const WalkPath& left, const WalkPath& right, double A,
                            const BFamily& bfam, RngStream& rng,
                            const TruncationCalibration& calib) {
  return m_like(left, right, A, calib, &bfam, &rng);
}

TruncationCalibration calibrate_truncation(const RhoFamily& family, double kappa,
                                           std::size_t n, RngStream& rng, long cap) {
  const RhoFamily tilted = family.tilt(kappa);
  constexpr double probe = 5.0;
  constexpr double settle = 40.0;  // e^{-40} is far below double noise here

  // Residual multiplier of one branch: cross `probe`, then accumulate
  // e^{-(V - probe)} until the walk has climbed `settle` past the probe.
  const auto one_branch = [&](bool tilted_branch) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double v = 0.0;
      long k = 0;
      while (v <= probe) {
        if (++k > cap) throw CapExceededError("calibrate_truncation: cap before probe level");
        v += tilted_branch ? tilted.sample_log(rng) : -family.sample_log(rng);
      }
      double resid = 0.0;
      while (v - probe <= settle) {
        resid += std::exp(-(v - probe));
        if (++k > cap) throw CapExceededError("calibrate_truncation: cap in residual tail");
        v += tilted_branch ? tilted.sample_log(rng) : -family.sample_log(rng);
      }
      acc += resid;
    }
    return acc / static_cast<double>(n);
  };

  TruncationCalibration out;
  out.c_geom = one_branch(true) + one_branch(false);
  return out;
}

RStoppingRule make_r_stopping_rule(const RhoFamily& family, double kappa, double rel_tol,
                                   double eps_cert, const std::optional<BFamily>& bfam) {
  if (!(rel_tol > 0.0 && rel_tol < 1.0) || !(eps_cert > 0.0 && eps_cert < 1.0)) {
    throw std::invalid_argument("make_r_stopping_rule: tolerances must lie in (0,1)");
  }
  RStoppingRule rule;
  rule.rel_tol = rel_tol;
  rule.eps_cert = eps_cert;
  rule.offset = -kInf;
  // Grid over s in (0, kappa); both moment bounds below need k(s) < 1.
  for (int j = 1; j < 64; ++j) {
    const double s = kappa * static_cast<double>(j) / 64.0;
    const double ks = family.moment(s);
    if (!(ks < 1.0 - 1e-12)) continue;
    const double bs = bfam ? bfam->moment(s) : 1.0;
    double log_bound;
    if (s <= 1.0) {
      log_bound = std::log(bs) - std::log1p(-ks);  // subadditivity of x^s
    } else {
      // Minkowski: ||R^B||_s <= ||B||_s / (1 - k(s)^{1/s}).
      log_bound = std::log(bs) - s * std::log1p(-std::pow(ks, 1.0 / s));
    }
    const double offset = (std::log(eps_cert) - log_bound) / s;
    if (offset > rule.offset) {
      rule.offset = offset;
      rule.s_star = s;
    }
  }
  if (!(rule.offset > -kInf)) {
    throw NoRootError("make_r_stopping_rule: no s with E[rho^s] < 1 found");
  }
  return rule;
}

namespace {

FunctionalSample r_like(const RhoFamily& family, const BFamily* bfam, RngStream& rng,
                        const RStoppingRule& rule, long cap) {
  double v = 0.0;
  double acc = bfam ? bfam->sample(rng) : 1.0;
  for (long k = 1; k <= cap; ++k) {
    v += family.sample_log(rng);
    const double b = bfam ? bfam->sample(rng) : 1.0;
    acc += b * std::exp(v);
    if (v <= std::log(rule.rel_tol * acc) + rule.offset) {
      FunctionalSample out;
      out.kind = bfam ? FunctionalKind::RB : FunctionalKind::R;
      out.value = acc;
      out.trunc_level = kInf;
      out.trunc_error_bound = rule.rel_tol * acc;
      out.eps_bias = rule.eps_cert;
      return out;
    }
  }
  throw CapExceededError("compute_R: step cap before certified stop");
}

}  // namespace

FunctionalSample compute_R(const RhoFamily& family, RngStream& rng, const RStoppingRule& rule,
                           long cap) {
  return r_like(family, nullptr, rng, rule, cap);
}

FunctionalSample compute_RB(const RhoFamily& family, const BFamily& bfam, RngStream& rng,
                            const RStoppingRule& rule, long cap) {
  return r_like(family, &bfam, rng, rule, cap);
}

ZParts compute_Z(const ConditionedISample& sample, double A,
                 const TruncationCalibration& calib) {
  if (!sample.h_equals_s) {
    throw std::invalid_argument("compute_Z: sample lacks the H = S certificate");
  }
  const auto& left = sample.left.values;
  const auto& right = sample.right.values;
  const std::size_t t_h = static_cast<std::size_t>(sample.t_h);
  if (left.empty() || right.size() <= t_h) throw PathTooShortError("compute_Z: missing data");

  // Mbar_1, left part: out to the innermost left index with V >= A
  // (inclusive, as the window includes its endpoints).
  double m1 = 0.0;
  bool crossed = std::isinf(A);
  for (std::size_t m = 1; m < left.size(); ++m) {
    m1 += std::exp(-left[m]);
    if (left[m] >= A) {
      crossed = true;
      break;
    }
  }
  if (!crossed) throw PathTooShortError("compute_Z: left branch never reaches A");
  // Mbar_1, right part: k = 0 .. min(first k with V_k >= A, T_H).
  for (std::size_t k = 0; k <= t_h; ++k) {
    m1 += std::exp(-right[k]);
    if (right[k] >= A) break;
  }

  // Mbar_2: window around T_H at depth A below H on both sides.
  const double h = sample.h;
  std::size_t t2_lo = 0;
  for (std::size_t k = t_h;; --k) {
    if (h - right[k] >= A) {
      t2_lo = k;
      break;
    }
    if (k == 0) break;
  }
  std::size_t t2_hi = right.size() - 1;
  crossed = std::isinf(A);
  for (std::size_t k = t_h; k < right.size(); ++k) {
    if (h - right[k] >= A) {
      t2_hi = k;
      crossed = true;
      break;
    }
  }
  if (!crossed) throw PathTooShortError("compute_Z: continuation never reaches depth A");
  double m2 = 0.0;
  for (std::size_t k = t2_lo; k <= t2_hi; ++k) m2 += std::exp(right[k] - h);

  const double eh = std::exp(h);
  ZParts out;
  out.m1 = FunctionalSample{FunctionalKind::M1, m1, A, std::exp(-A) * calib.c_geom,
                            sample.left.eps_bias};
  out.m2 = FunctionalSample{FunctionalKind::M2, m2, A, std::exp(-A) * calib.c_geom,
                            sample.eps_cert};
  out.z = FunctionalSample{FunctionalKind::Z, eh * m1 * m2, A,
                           eh * std::exp(-A) * calib.c_geom * (m1 + m2),
                           std::max(sample.left.eps_bias, sample.eps_cert)};
  return out;
}

FunctionalSample compute_KI(const ExcursionRecord& ex) {
  return FunctionalSample{FunctionalKind::KI, ex.ki, kInf, 0.0, 0.0};
}

}  // namespace perpetuity
