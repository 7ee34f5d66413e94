#include "perpetuity/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <boost/math/special_functions/beta.hpp>

namespace perpetuity {

double EstimateWithCI::half_width() const {
  return normal_quantile(0.5 + ci_level / 2.0) * se;
}

EstimateWithCI mean_ci(std::span<const double> values, double ci_level) {
  const std::size_t n = values.size();
  if (n < 2) throw std::invalid_argument("mean_ci: need at least two values");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) {
    const double d = v - mean;
    ss += d * d;
  }
  const double var = ss / static_cast<double>(n - 1);
  return EstimateWithCI{mean, std::sqrt(var / static_cast<double>(n)), n, ci_level};
}

double sample_covariance(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 2) throw std::invalid_argument("sample_covariance: size mismatch");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += (x[i] - mx) * (y[i] - my);
  return acc / static_cast<double>(n - 1);
}

double ratio_delta_se(const EstimateWithCI& num, const EstimateWithCI& den, double cov) {
  if (den.point == 0.0) throw std::invalid_argument("ratio_delta_se: zero denominator");
  const double r = num.point / den.point;
  const double var = (num.se * num.se) / (den.point * den.point) +
                     (r * r) * (den.se * den.se) / (den.point * den.point) -
                     2.0 * r * cov / (den.point * den.point);
  return std::sqrt(std::max(var, 0.0));
}

double kolmogorov_sf(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 1.0) {
    // Jacobi-theta form, accurate for small arguments.
    const double pi = std::numbers::pi;
    double sum = 0.0;
    for (int j = 1; j <= 20; j += 2) {
      sum += std::exp(-static_cast<double>(j) * j * pi * pi / (8.0 * x * x));
    }
    const double cdf = std::sqrt(2.0 * pi) / x * sum;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * x * x);
    sum += sign * term;
    sign = -sign;
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

struct SortedWeighted {
  std::vector<double> v;
  std::vector<double> w;
  double total = 0.0;
  double sum_sq = 0.0;
};

SortedWeighted sort_weighted(std::span<const double> x, std::span<const double> wx) {
  SortedWeighted out;
  const std::size_t n = x.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  out.v.reserve(n);
  out.w.reserve(n);
  for (std::size_t i : idx) {
    const double wi = wx.empty() ? 1.0 : wx[i];
    if (!(wi >= 0.0)) throw std::invalid_argument("ks: weights must be nonnegative");
    out.v.push_back(x[i]);
    out.w.push_back(wi);
    out.total += wi;
    out.sum_sq += wi * wi;
  }
  if (!(out.total > 0.0)) throw std::invalid_argument("ks: total weight must be positive");
  return out;
}

KsResult ks_impl(std::span<const double> x, std::span<const double> wx,
                 std::span<const double> y, std::span<const double> wy) {
  if (x.empty() || y.empty()) throw std::invalid_argument("ks: empty sample");
  const SortedWeighted a = sort_weighted(x, wx);
  const SortedWeighted b = sort_weighted(y, wy);

  double d = 0.0;
  double ca = 0.0, cb = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.v.size() || j < b.v.size()) {
    double t;
    if (j >= b.v.size() || (i < a.v.size() && a.v[i] <= b.v[j])) {
      t = a.v[i];
    } else {
      t = b.v[j];
    }
    // Consume all ties at t from both samples before comparing the CDFs.
    while (i < a.v.size() && a.v[i] == t) ca += a.w[i++];
    while (j < b.v.size() && b.v[j] == t) cb += b.w[j++];
    d = std::max(d, std::abs(ca / a.total - cb / b.total));
  }

  const double n_eff_x = a.total * a.total / a.sum_sq;
  const double n_eff_y = b.total * b.total / b.sum_sq;
  const double ne = std::sqrt(n_eff_x * n_eff_y / (n_eff_x + n_eff_y));
  // Stephens' small-sample correction on top of the asymptotic law.
  const double p = kolmogorov_sf((ne + 0.12 + 0.11 / ne) * d);
  return KsResult{d, p, n_eff_x, n_eff_y};
}

}  // namespace

KsResult ks_two_sample(std::span<const double> x, std::span<const double> y) {
  return ks_impl(x, {}, y, {});
}

KsResult ks_two_sample_weighted(std::span<const double> x, std::span<const double> wx,
                                std::span<const double> y, std::span<const double> wy) {
  return ks_impl(x, wx, y, wy);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p outside (0,1)");
  // Acklam's algorithm.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double q, r;
  if (p < p_low) {
    q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p <= 1.0 - p_low) {
    q = p - 0.5;
    r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  q = std::sqrt(-2.0 * std::log(1.0 - p));
  return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
         ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
}

double binomial_ci_lower(std::size_t k, std::size_t n, double ci_level) {
  if (n == 0) throw std::invalid_argument("binomial_ci_lower: n = 0");
  if (k == 0) return 0.0;
  const double alpha = 1.0 - ci_level;
  return boost::math::ibeta_inv(static_cast<double>(k), static_cast<double>(n - k + 1),
                                alpha / 2.0);
}

double binomial_ci_upper(std::size_t k, std::size_t n, double ci_level) {
  if (n == 0) throw std::invalid_argument("binomial_ci_upper: n = 0");
  if (k == n) return 1.0;
  const double alpha = 1.0 - ci_level;
  return boost::math::ibeta_inv(static_cast<double>(k + 1), static_cast<double>(n - k),
                                1.0 - alpha / 2.0);
}

}  // namespace perpetuity
