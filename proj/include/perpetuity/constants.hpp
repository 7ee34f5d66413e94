#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "perpetuity/dist.hpp"
#include "perpetuity/functionals.hpp"
#include "perpetuity/paths.hpp"
#include "perpetuity/stats.hpp"

namespace perpetuity {

// Fixed-kappa plateau fit of t^kappa * P(X >= t) on a geometric grid.
struct TailGridSpec {
  std::optional<double> t_min;  // default: 0.90 quantile of the sample
  std::optional<double> t_max;  // default: leaves ~1.2 * min_exceed exceedances
  std::size_t points = 40;
  double drift_tol = 0.10;       // (max-min)/min of scaled values over the window
  std::size_t min_exceed = 100;  // exceedances still required at the window end
  std::size_t min_window = 5;    // grid points a window must span
};

struct TailFit {
  std::vector<double> t_grid;
  std::vector<double> tail;    // empirical P(X >= t)
  std::vector<double> scaled;  // t^kappa * tail
  std::vector<std::size_t> exceedances;

  bool has_plateau = false;
  double fitted_constant = 0.0;  // exceedance-weighted mean of scaled over the window
  std::size_t window_lo = 0;     // indices into t_grid, inclusive
  std::size_t window_hi = 0;
  double max_drift = 0.0;
  std::size_t n_exceed_hi = 0;
  std::size_t n_samples = 0;

  // Crude sampling error of the fitted constant (binomial noise at the
  // thinnest point of the window).
  double fit_se() const;
};

// kappa is taken from the solver, never fitted; the fit has one free
// parameter (the constant). The plateau window is the widest stretch of the
// grid whose scaled values drift less than drift_tol while min_exceed
// exceedances remain; ties prefer the deeper-tail window. has_plateau is
// false when no window qualifies (reported, not fatal).
TailFit direct_tail_fit(std::vector<double> samples, double kappa, const TailGridSpec& spec);

// Feller / Iglehart constants from first-excursion statistics:
//   C_F = (1 - E[e^{kappa V(T_neg)}]) / (kappa E[rho^kappa log rho] E[T_neg])
//   C_I = (1 - E[e^{kappa V(T_neg)}]) C_F
// with delta-method standard errors (the two sample means are correlated).
struct ExcursionEstimates {
  EstimateWithCI exp_kv;  // E[e^{kappa V(T_neg)}] = E[e^{-kappa O_1}]
  EstimateWithCI t_neg;
  double cov_exp_t = 0.0;     // covariance of the two sample means
  double kappa_log_mom = 0.0;  // analytic E[rho^kappa log rho]
  EstimateWithCI c_f;
  EstimateWithCI c_i;
};
ExcursionEstimates estimate_feller_iglehart(std::span<const ExcursionRecord> excursions,
                                            const RhoFamily& family, double kappa,
                                            double ci_level = 0.95);

// Mean of value^kappa over M (or M^B) replicas.
EstimateWithCI estimate_em_kappa(std::span<const FunctionalSample> samples, double kappa,
                                 double ci_level = 0.95);

// The algebraic web on one set of component estimates:
//   C_K = C_F E[M^kappa],  C_KI = C_I E[M^kappa],  C_U = C_I E[M^kappa]^2,
//   C_KB = C_F E[(M^B)^kappa],  C_KI' = (1 - E[e^{-kappa O_1}]) C_K.
struct ConstantValue {
  double value = 0.0;
  double se = 0.0;
};
struct ConstantsSet {
  ConstantValue c_f, c_i, em, c_k, c_ki, c_ki_alt, c_u;
  std::optional<ConstantValue> emb, c_kb;
  bool ki_routes_within_ci = true;
};
ConstantsSet assemble_constants(const ExcursionEstimates& exc, const EstimateWithCI& em,
                                const std::optional<EstimateWithCI>& emb,
                                double ci_level = 0.95);

// pi * kappa / sin(pi * kappa); requires kappa < 1.
double tauberian_prefactor(double kappa);

// Default h-rule h(lambda) = h_coeff * log(1/lambda); with h_coeff < 1 both
// corollary hypotheses hold: lambda e^h = lambda^{1-h_coeff} -> 0, h -> inf.
double tauberian_h(double lambda, double h_coeff);

}  // namespace perpetuity
