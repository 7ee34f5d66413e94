#include "perpetuity/paths.hpp"

#include <cmath>
#include <stdexcept>

#include "perpetuity/errors.hpp"
#include "perpetuity/stats.hpp"

namespace perpetuity {

namespace {

double stop_level(double a_stop, double kappa, double eps_bias) {
  return std::max(a_stop, std::log(1.0 / eps_bias) / kappa);
}

}  // namespace

WalkPath sample_walk(const RhoFamily& family, MeasureTag measure, std::size_t n,
                     RngStream& rng) {
  const RhoFamily law = measure.base == MeasureTag::Base::Qtilde
                            ? family.tilt(measure.kappa_used)
                            : family;
  WalkPath path;
  path.measure = measure;
  path.values.reserve(n + 1);
  path.values.push_back(0.0);
  double v = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    v += law.sample_log(rng);
    path.values.push_back(v);
  }
  return path;
}

ExcursionRecord first_excursion(const RhoFamily& family, RngStream& rng, long cap) {
  double v = 0.0;
  double h = 0.0;
  double ki = 1.0;
  long t_h = 0;
  for (long k = 1; k <= cap; ++k) {
    v += family.sample_log(rng);
    ki += std::exp(v);
    if (v > h) {
      h = v;
      t_h = k;
    }
    if (v <= 0.0) return ExcursionRecord{k, -v, h, t_h, ki};
  }
  throw CapExceededError("first_excursion: no return to 0 within the step cap");
}

WalkPath sample_stay_positive_tilted(const RhoFamily& family, double kappa, double a_stop,
                                     RngStream& rng, double eps_bias, long rejection_budget,
                                     long cap, long* attempts_out) {
  if (!(a_stop > 0.0)) throw std::invalid_argument("sample_stay_positive_tilted: a_stop <= 0");
  const RhoFamily tilted = family.tilt(kappa);
  const double level = stop_level(a_stop, kappa, eps_bias);
  for (long attempt = 0; attempt < rejection_budget; ++attempt) {
    if (attempts_out) *attempts_out = attempt + 1;
    std::vector<double> vals;
    vals.push_back(0.0);
    double v = 0.0;
    bool rejected = false;
    for (long k = 1; k <= cap; ++k) {
      v += tilted.sample_log(rng);
      if (v <= 0.0) {
        rejected = true;
        break;
      }
      vals.push_back(v);
      if (v > level) {
        return WalkPath{std::move(vals),
                        MeasureTag{MeasureTag::Base::Qtilde, kappa},
                        Certificate::stay_positive, eps_bias};
      }
    }
    if (!rejected) {
      throw CapExceededError("sample_stay_positive_tilted: step cap before stop level");
    }
  }
  throw RejectionBudgetError("sample_stay_positive_tilted: acceptance rate collapsed");
}

WalkPath sample_stay_nonneg_left(const RhoFamily& family, double kappa, double a_stop,
                                 RngStream& rng, double eps_bias, long rejection_budget,
                                 long cap, long* attempts_out) {
  if (!(a_stop > 0.0)) throw std::invalid_argument("sample_stay_nonneg_left: a_stop <= 0");
  const double level = stop_level(a_stop, kappa, eps_bias);
  for (long attempt = 0; attempt < rejection_budget; ++attempt) {
    if (attempts_out) *attempts_out = attempt + 1;
    std::vector<double> vals;
    vals.push_back(0.0);
    double v = 0.0;
    bool rejected = false;
    for (long k = 1; k <= cap; ++k) {
      v -= family.sample_log(rng);  // left branch has increments -log rho
      if (v < 0.0) {
        rejected = true;
        break;
      }
      vals.push_back(v);
      if (v > level) {
        return WalkPath{std::move(vals), MeasureTag{MeasureTag::Base::Q, 0.0},
                        Certificate::stay_nonneg, eps_bias};
      }
    }
    if (!rejected) {
      throw CapExceededError("sample_stay_nonneg_left: step cap before stop level");
    }
  }
  throw RejectionBudgetError("sample_stay_nonneg_left: acceptance rate collapsed");
}

LadderDecomposition ladder_epochs(const WalkPath& path, double kappa) {
  if (path.values.empty()) throw std::invalid_argument("ladder_epochs: empty path");
  LadderDecomposition out;
  double cur = path.values[0];
  out.epochs.push_back(0);
  out.heights.push_back(cur);
  out.weight = std::exp(-kappa * cur);
  for (std::size_t i = 1; i < path.values.size(); ++i) {
    if (path.values[i] > cur) {
      cur = path.values[i];
      out.epochs.push_back(i);
      out.heights.push_back(cur);
      out.weight += std::exp(-kappa * cur);
    }
  }
  return out;
}

LadderCalibration calibrate_ladder(const RhoFamily& family, double kappa, std::size_t n,
                                   RngStream& rng, long cap) {
  const RhoFamily tilted = family.tilt(kappa);
  std::vector<double> vals;
  vals.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = 0.0;
    long k = 0;
    do {
      if (++k > cap) throw CapExceededError("calibrate_ladder: no ascent within cap");
      v += tilted.sample_log(rng);
    } while (v <= 0.0);
    vals.push_back(std::exp(-kappa * v));
  }
  const EstimateWithCI est = mean_ci(vals);
  return LadderCalibration{est.point, est.se, n};
}

MountainSample sample_mountain(const RhoFamily& family, double kappa, RngStream& rng,
                               double eps_bias, const LadderCalibration& calib, long cap) {
  const RhoFamily tilted = family.tilt(kappa);
  // From the newest epoch at height y, future epoch heights are y plus fresh
  // ladder heights, so the unsimulated weight has mean e^{-kappa y} m/(1-m).
  const double resid_factor = calib.m_hat / (1.0 - calib.m_hat);

  std::vector<double> vals;
  vals.push_back(0.0);
  std::vector<std::size_t> epochs{0};
  std::vector<double> heights{0.0};
  double weight = 1.0;
  double max_h = 0.0;
  double resid = resid_factor;  // bound at epoch 0
  double v = 0.0;
  long k = 0;
  while (resid >= eps_bias * weight) {
    if (++k > cap) throw CapExceededError("sample_mountain: step cap reached");
    v += tilted.sample_log(rng);
    vals.push_back(v);
    if (v > max_h) {
      max_h = v;
      epochs.push_back(static_cast<std::size_t>(k));
      heights.push_back(v);
      weight += std::exp(-kappa * v);
      resid = std::exp(-kappa * v) * resid_factor;
    }
  }

  // Theta proportional to e^{-kappa Y_{e_p}} among the epochs found.
  const double target = rng.uniform() * weight;
  double acc = 0.0;
  std::size_t pick = epochs.size() - 1;
  for (std::size_t p = 0; p < epochs.size(); ++p) {
    acc += std::exp(-kappa * heights[p]);
    if (target < acc) {
      pick = p;
      break;
    }
  }

  vals.resize(epochs[pick] + 1);
  MountainSample out;
  out.ascent = WalkPath{std::move(vals), MeasureTag{MeasureTag::Base::Qtilde, kappa},
                        Certificate::mountain, eps_bias};
  out.theta = epochs[pick];
  out.s = heights[pick];
  out.importance_weight = weight;
  out.residual_bound = resid;
  return out;
}

ConditionedISample sample_conditioned_I(const RhoFamily& family, double kappa, RngStream& rng,
                                        double eps_cert, double eps_bias,
                                        double continuation_depth, double cert_safety,
                                        bool want_left, long cap) {
  ConditionedISample out;
  out.eps_cert = eps_cert;

  // Excursion part.
  std::vector<double> vals;
  vals.push_back(0.0);
  double v = 0.0;
  double h = 0.0;
  double ki = 1.0;
  long t_h = 0;
  long t_neg = -1;
  for (long k = 1; k <= cap; ++k) {
    v += family.sample_log(rng);
    vals.push_back(v);
    ki += std::exp(v);
    if (v > h) {
      h = v;
      t_h = k;
    }
    if (v <= 0.0) {
      t_neg = k;
      break;
    }
  }
  if (t_neg < 0) throw CapExceededError("sample_conditioned_I: excursion exceeded cap");

  // Continuation: the walk may never again exceed H. We certify this once it
  // sits max(log(cert_safety/eps_cert)/kappa, continuation_depth) below H;
  // the Chernoff bound P(future max rises by x) <= e^{-kappa x} makes the
  // missed-violation probability at most eps_cert for cert_safety = 1.
  const double depth =
      std::max(std::log(cert_safety / eps_cert) / kappa, continuation_depth);
  bool ok = true;
  for (long k = t_neg + 1;; ++k) {
    if (h - v >= depth) break;
    if (k > cap) throw CapExceededError("sample_conditioned_I: continuation exceeded cap");
    v += family.sample_log(rng);
    vals.push_back(v);
    if (v > h) {
      ok = false;  // the excursion max was not the absolute max
      break;
    }
  }

  out.right = WalkPath{std::move(vals), MeasureTag{MeasureTag::Base::Q, 0.0},
                       Certificate::conditioned_I, eps_cert};
  out.h = h;
  out.t_h = t_h;
  out.t_neg = t_neg;
  out.o1 = -out.right.values[static_cast<std::size_t>(t_neg)];
  out.ki = ki;
  out.h_equals_s = ok;
  if (ok && want_left) {
    out.left = sample_stay_nonneg_left(family, kappa, continuation_depth, rng, eps_bias);
  }
  return out;
}

double sample_direct_s(const RhoFamily& family, double kappa, RngStream& rng, double eps_cert,
                       long cap) {
  const double gap = std::log(1.0 / eps_cert) / kappa;
  double v = 0.0;
  double s = 0.0;
  for (long k = 1; k <= cap; ++k) {
    v += family.sample_log(rng);
    if (v > s) s = v;
    if (s - v >= gap) return s;
  }
  throw CapExceededError("sample_direct_s: step cap reached");
}

}  // namespace perpetuity
