#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "perpetuity/rng.hpp"
#include "perpetuity/stats.hpp"

using namespace perpetuity;

TEST_CASE("mean_ci on constant and two-point samples") {
  const std::vector<double> ones{1.0, 1.0, 1.0, 1.0};
  const auto a = mean_ci(ones);
  CHECK(a.point == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(a.se == doctest::Approx(0.0).epsilon(1e-15));

  // s = sqrt(2), se = sqrt(2)/sqrt(2) = 1.
  const std::vector<double> two{0.0, 2.0};
  const auto b = mean_ci(two);
  CHECK(b.point == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(b.se == doctest::Approx(1.0).epsilon(1e-15));

  CHECK_THROWS_AS(mean_ci(std::vector<double>{}), std::invalid_argument);
  CHECK_THROWS_AS(mean_ci(std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("ratio_delta_se cases") {
  const EstimateWithCI exact{1.0, 0.0, 10, 0.95};
  CHECK(ratio_delta_se(exact, exact, 0.0) == doctest::Approx(0.0).epsilon(1e-15));

  const EstimateWithCI num{1.0, 0.1, 10, 0.95};
  const EstimateWithCI den{1.0, 0.0, 10, 0.95};
  CHECK(ratio_delta_se(num, den, 0.0) == doctest::Approx(0.1).epsilon(1e-12));

  // sqrt(0.1^2/4 + 4 * 0.1^2 / 16) = sqrt(0.005)
  const EstimateWithCI n2{2.0, 0.1, 10, 0.95};
  const EstimateWithCI d2{2.0, 0.1, 10, 0.95};
  CHECK(ratio_delta_se(n2, d2, 0.0) ==
        doctest::Approx(0.07071067811865475).epsilon(1e-12));

  CHECK_THROWS_AS(ratio_delta_se(num, EstimateWithCI{0.0, 0.1, 10, 0.95}, 0.0),
                  std::invalid_argument);
}

TEST_CASE("ks two-sample basics") {
  std::vector<double> x;
  RngStream rng(11, 0);
  for (int i = 0; i < 2000; ++i) x.push_back(rng.uniform());
  const auto same = ks_two_sample(x, x);
  CHECK(same.statistic == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(same.p_value == doctest::Approx(1.0).epsilon(1e-12));

  std::vector<double> y;
  for (int i = 0; i < 10000; ++i) y.push_back(0.5 + rng.uniform());
  std::vector<double> x2;
  for (int i = 0; i < 10000; ++i) x2.push_back(rng.uniform());
  const auto shifted = ks_two_sample(x2, y);
  CHECK(shifted.statistic > 0.4);
  CHECK(shifted.p_value < 1e-6);

  CHECK_THROWS_AS(ks_two_sample({}, x), std::invalid_argument);
}

TEST_CASE("equal weights reduce the weighted KS to the plain one") {
  RngStream rng(13, 0);
  std::vector<double> x, y, wx, wy;
  for (int i = 0; i < 500; ++i) {
    x.push_back(rng.normal());
    wx.push_back(0.7);
  }
  for (int i = 0; i < 800; ++i) {
    y.push_back(rng.normal() * 1.1);
    wy.push_back(2.3);
  }
  const auto plain = ks_two_sample(x, y);
  const auto weighted = ks_two_sample_weighted(x, wx, y, wy);
  CHECK(weighted.statistic == doctest::Approx(plain.statistic).epsilon(1e-12));
  CHECK(weighted.p_value == doctest::Approx(plain.p_value).epsilon(1e-12));
  CHECK(weighted.n_eff_x == doctest::Approx(500.0).epsilon(1e-12));
  CHECK(weighted.n_eff_y == doctest::Approx(800.0).epsilon(1e-12));
}

TEST_CASE("ks null calibration: rejection rate at 5% is 5% +- 1%") {
  // Two halves of one stream are a true null; over 1000 repetitions the
  // fraction of p-values below 0.05 should sit near 0.05.
  int rejections = 0;
  const int reps = 1000;
  for (int r = 0; r < reps; ++r) {
    RngStream rng(909, static_cast<std::uint64_t>(r));
    std::vector<double> x(500), y(500);
    for (auto& v : x) v = rng.normal();
    for (auto& v : y) v = rng.normal();
    if (ks_two_sample(x, y).p_value < 0.05) ++rejections;
  }
  const double rate = static_cast<double>(rejections) / reps;
  CHECK(rate > 0.04);
  CHECK(rate < 0.06);
}

TEST_CASE("normal quantile and kolmogorov tail") {
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959964).epsilon(1e-5));
  CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(normal_quantile(0.025) == doctest::Approx(-1.959964).epsilon(1e-5));
  // Known value: P(K > 1.36) ~ 0.0505 (the 5% critical point is 1.358).
  CHECK(kolmogorov_sf(1.358) == doctest::Approx(0.05).epsilon(2e-2));
  CHECK(kolmogorov_sf(0.0) == doctest::Approx(1.0));
  CHECK(kolmogorov_sf(3.0) < 1e-6);
}

TEST_CASE("clopper-pearson bounds") {
  // 50/100 at 95%: the textbook interval (0.3983, 0.6017).
  CHECK(binomial_ci_lower(50, 100) == doctest::Approx(0.3983).epsilon(2e-3));
  CHECK(binomial_ci_upper(50, 100) == doctest::Approx(0.6017).epsilon(2e-3));
  CHECK(binomial_ci_lower(0, 10) == doctest::Approx(0.0));
  CHECK(binomial_ci_upper(10, 10) == doctest::Approx(1.0));
}

TEST_CASE("sample covariance matches hand value") {
  const std::vector<double> x{1.0, 2.0, 3.0};
  const std::vector<double> y{2.0, 4.0, 7.0};
  // means 2, 13/3; cov = ((-1)(-7/3) + 0 + (1)(8/3)) / 2 = 2.5
  CHECK(sample_covariance(x, y) == doctest::Approx(2.5).epsilon(1e-12));
}
