#include "perpetuity/constants.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "perpetuity/errors.hpp"

namespace perpetuity {

double TailFit::fit_se() const {
  if (!has_plateau || n_exceed_hi == 0) return 0.0;
  return fitted_constant / std::sqrt(static_cast<double>(n_exceed_hi));
}

TailFit direct_tail_fit(std::vector<double> samples, double kappa, const TailGridSpec& spec) {
  const std::size_t n = samples.size();
  if (n < 100) throw std::invalid_argument("direct_tail_fit: too few samples");
  if (spec.points < 2) throw std::invalid_argument("direct_tail_fit: need >= 2 grid points");
  std::sort(samples.begin(), samples.end());

  const double t_min = spec.t_min ? *spec.t_min : samples[static_cast<std::size_t>(0.90 * n)];
  std::size_t hi_rank = static_cast<std::size_t>(1.2 * static_cast<double>(spec.min_exceed));
  hi_rank = std::min(hi_rank, n - 1);
  const double t_max = spec.t_max ? *spec.t_max : samples[n - 1 - hi_rank];
  if (!(t_min > 0.0) || !(t_max > t_min)) {
    throw std::invalid_argument("direct_tail_fit: bad threshold grid");
  }

  TailFit fit;
  fit.n_samples = n;
  const double log_step = std::log(t_max / t_min) / static_cast<double>(spec.points - 1);
  for (std::size_t i = 0; i < spec.points; ++i) {
    const double t = t_min * std::exp(log_step * static_cast<double>(i));
    const auto it = std::lower_bound(samples.begin(), samples.end(), t);
    const std::size_t exceed = static_cast<std::size_t>(samples.end() - it);
    const double tail = static_cast<double>(exceed) / static_cast<double>(n);
    fit.t_grid.push_back(t);
    fit.exceedances.push_back(exceed);
    fit.tail.push_back(tail);
    fit.scaled.push_back(std::pow(t, kappa) * tail);
  }

  // Widest admissible window; ties go to the deeper-tail (larger t_lo) one.
  std::size_t best_lo = 0, best_hi = 0, best_len = 0;
  for (std::size_t lo = 0; lo < spec.points; ++lo) {
    double mn = fit.scaled[lo], mx = fit.scaled[lo];
    for (std::size_t hi = lo; hi < spec.points; ++hi) {
      mn = std::min(mn, fit.scaled[hi]);
      mx = std::max(mx, fit.scaled[hi]);
      if (fit.exceedances[hi] < spec.min_exceed) break;
      if (!(mn > 0.0) || (mx - mn) / mn > spec.drift_tol) break;
      const std::size_t len = hi - lo + 1;
      if (len >= spec.min_window && len >= best_len) {
        best_len = len;
        best_lo = lo;
        best_hi = hi;
      }
    }
  }
  if (best_len == 0) return fit;  // has_plateau stays false

  fit.has_plateau = true;
  fit.window_lo = best_lo;
  fit.window_hi = best_hi;
  double wsum = 0.0, acc = 0.0;
  double mn = fit.scaled[best_lo], mx = fit.scaled[best_lo];
  for (std::size_t i = best_lo; i <= best_hi; ++i) {
    const double w = static_cast<double>(fit.exceedances[i]);
    acc += w * fit.scaled[i];
    wsum += w;
    mn = std::min(mn, fit.scaled[i]);
    mx = std::max(mx, fit.scaled[i]);
  }
  fit.fitted_constant = acc / wsum;
  fit.max_drift = (mx - mn) / mn;
  fit.n_exceed_hi = fit.exceedances[best_hi];
  return fit;
}

ExcursionEstimates estimate_feller_iglehart(std::span<const ExcursionRecord> excursions,
                                            const RhoFamily& family, double kappa,
                                            double ci_level) {
  const std::size_t n = excursions.size();
  if (n < 2) throw std::invalid_argument("estimate_feller_iglehart: need >= 2 excursions");
  std::vector<double> ev(n), tn(n);
  for (std::size_t i = 0; i < n; ++i) {
    ev[i] = std::exp(-kappa * excursions[i].o1);  // e^{kappa V(T_neg)}
    tn[i] = static_cast<double>(excursions[i].t_neg);
  }
  ExcursionEstimates out;
  out.exp_kv = mean_ci(ev, ci_level);
  out.t_neg = mean_ci(tn, ci_level);
  out.cov_exp_t = sample_covariance(ev, tn) / static_cast<double>(n);
  out.kappa_log_mom = family.kappa_log_moment(kappa);

  const double denom = kappa * out.kappa_log_mom * out.t_neg.point;
  const double x = out.exp_kv.point;
  const double cf = (1.0 - x) / denom;
  // Delta method in (xbar, tbar); the two means share the excursion sample.
  const double dcf_dx = -1.0 / denom;
  const double dcf_dt = -cf / out.t_neg.point;
  const double var_cf = dcf_dx * dcf_dx * out.exp_kv.se * out.exp_kv.se +
                        dcf_dt * dcf_dt * out.t_neg.se * out.t_neg.se +
                        2.0 * dcf_dx * dcf_dt * out.cov_exp_t;
  out.c_f = EstimateWithCI{cf, std::sqrt(std::max(var_cf, 0.0)), n, ci_level};

  const double ci_val = (1.0 - x) * cf;
  const double dci_dx = -2.0 * (1.0 - x) / denom;
  const double dci_dt = -ci_val / out.t_neg.point;
  const double var_ci = dci_dx * dci_dx * out.exp_kv.se * out.exp_kv.se +
                        dci_dt * dci_dt * out.t_neg.se * out.t_neg.se +
                        2.0 * dci_dx * dci_dt * out.cov_exp_t;
  out.c_i = EstimateWithCI{ci_val, std::sqrt(std::max(var_ci, 0.0)), n, ci_level};
  return out;
}

EstimateWithCI estimate_em_kappa(std::span<const FunctionalSample> samples, double kappa,
                                 double ci_level) {
  std::vector<double> powed;
  powed.reserve(samples.size());
  double eps = 0.0, trunc = 0.0;
  for (const auto& s : samples) {
    powed.push_back(std::pow(s.value, kappa));
    eps = std::max(eps, s.eps_bias);
    trunc += s.trunc_error_bound;
  }
  EstimateWithCI est = mean_ci(powed, ci_level);
  est.eps_bias = eps;
  est.trunc_error_mean = trunc / static_cast<double>(samples.size());
  return est;
}

ConstantsSet assemble_constants(const ExcursionEstimates& exc, const EstimateWithCI& em,
                                const std::optional<EstimateWithCI>& emb, double ci_level) {
  ConstantsSet out;
  out.c_f = ConstantValue{exc.c_f.point, exc.c_f.se};
  out.c_i = ConstantValue{exc.c_i.point, exc.c_i.se};
  out.em = ConstantValue{em.point, em.se};

  const auto product_se = [](const ConstantValue& a, const ConstantValue& b) {
    return std::sqrt(a.value * a.value * b.se * b.se + b.value * b.value * a.se * a.se);
  };
  out.c_k = ConstantValue{exc.c_f.point * em.point, product_se(out.c_f, out.em)};
  out.c_ki = ConstantValue{exc.c_i.point * em.point, product_se(out.c_i, out.em)};

  // C_U = C_I E[M^kappa]^2.
  const double em2 = em.point * em.point;
  const double var_cu = em2 * em2 * exc.c_i.se * exc.c_i.se +
                        4.0 * exc.c_i.point * exc.c_i.point * em2 * em.se * em.se;
  out.c_u = ConstantValue{exc.c_i.point * em2, std::sqrt(var_cu)};

  // Section-6 route: C_KI' = (1 - E[e^{-kappa O_1}]) C_K. On one sample this
  // coincides with C_I E[M^kappa] up to rounding; the interesting comparison
  // is across independent runs.
  const double one_minus_x = 1.0 - exc.exp_kv.point;
  out.c_ki_alt = ConstantValue{one_minus_x * out.c_k.value, out.c_ki.se};
  const double z = normal_quantile(0.5 + ci_level / 2.0);
  const double gap = std::abs(out.c_ki.value - out.c_ki_alt.value);
  out.ki_routes_within_ci =
      gap <= z * std::sqrt(out.c_ki.se * out.c_ki.se + out.c_ki_alt.se * out.c_ki_alt.se) +
                 1e-12 * std::abs(out.c_ki.value);

  if (emb) {
    out.emb = ConstantValue{emb->point, emb->se};
    out.c_kb = ConstantValue{exc.c_f.point * emb->point, product_se(out.c_f, *out.emb)};
  }
  return out;
}

double tauberian_prefactor(double kappa) {
  if (!(kappa > 0.0 && kappa < 1.0)) {
    throw KappaNotSubcriticalError("tauberian_prefactor: requires 0 < kappa < 1");
  }
  return std::numbers::pi * kappa / std::sin(std::numbers::pi * kappa);
}

double tauberian_h(double lambda, double h_coeff) {
  if (!(lambda > 0.0 && lambda < 1.0)) {
    throw std::invalid_argument("tauberian_h: lambda must lie in (0,1)");
  }
  return h_coeff * std::log(1.0 / lambda);
}

}  // namespace perpetuity
