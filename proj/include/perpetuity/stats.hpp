#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace perpetuity {

struct EstimateWithCI {
  double point = 0.0;
  double se = 0.0;  // standard error of `point`
  std::size_t n = 0;
  double ci_level = 0.95;
  // Bias bookkeeping carried along from the samplers: the conditioning bias
  // of the paths behind the estimate and the mean declared truncation error.
  double eps_bias = 0.0;
  double trunc_error_mean = 0.0;

  double half_width() const;  // z(ci_level) * se
  double lo() const { return point - half_width(); }
  double hi() const { return point + half_width(); }
};

struct KsResult {
  double statistic = 0.0;  // sup |F_x - F_y|
  double p_value = 1.0;    // asymptotic, Stephens-corrected
  double n_eff_x = 0.0;    // (sum w)^2 / sum w^2
  double n_eff_y = 0.0;
};

// Sample mean with normal CI. Requires n >= 2.
EstimateWithCI mean_ci(std::span<const double> values, double ci_level = 0.95);

// Two-sample Kolmogorov-Smirnov. The weighted variant uses effective sample
// sizes n_eff = (sum w)^2 / sum w^2 in the p-value; with equal weights it
// reduces exactly to the unweighted statistic.
KsResult ks_two_sample(std::span<const double> x, std::span<const double> y);
KsResult ks_two_sample_weighted(std::span<const double> x, std::span<const double> wx,
                                std::span<const double> y, std::span<const double> wy);

// First-order delta-method standard error of num.point / den.point.
double ratio_delta_se(const EstimateWithCI& num, const EstimateWithCI& den, double cov);

double sample_covariance(std::span<const double> x, std::span<const double> y);

// Standard normal quantile (Acklam's rational approximation, |err| < 1.2e-9).
double normal_quantile(double p);

// P(K > x) for the Kolmogorov distribution.
double kolmogorov_sf(double x);

// Exact (Clopper-Pearson) binomial confidence bounds for k successes in n.
double binomial_ci_lower(std::size_t k, std::size_t n, double ci_level = 0.95);
double binomial_ci_upper(std::size_t k, std::size_t n, double ci_level = 0.95);

}  // namespace perpetuity
