#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "perpetuity/dist.hpp"
#include "perpetuity/errors.hpp"
#include "perpetuity/rng.hpp"
#include "perpetuity/stats.hpp"

using namespace perpetuity;

namespace {

const double kE = 2.718281828459045;

RhoFamily two_point_ref() { return RhoFamily::two_point(2.0, 0.5, 1.0 / 3.0); }
RhoFamily log_normal_ref() { return RhoFamily::log_normal(-0.5, 1.0); }
RhoFamily beta_ratio_ref() { return RhoFamily::beta_ratio(2.0, 3.0); }

}  // namespace

TEST_CASE("sampling stays on the family support") {
  RngStream rng(21, 0);
  const auto tp = two_point_ref();
  for (int i = 0; i < 200; ++i) {
    const double v = tp.sample(rng);
    CHECK((v == 2.0 || v == 0.5));
  }
  const auto ln = log_normal_ref();
  const auto br = beta_ratio_ref();
  for (int i = 0; i < 200; ++i) {
    CHECK(ln.sample(rng) > 0.0);
    CHECK(br.sample(rng) > 0.0);
  }
}

TEST_CASE("moment closed forms") {
  CHECK(two_point_ref().moment(1.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(two_point_ref().moment(0.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(log_normal_ref().moment(0.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(beta_ratio_ref().moment(0.0) == doctest::Approx(1.0).epsilon(1e-14));
  // Lognormal: exp(m s + s^2 sigma^2 / 2) = exp(-1 + 2) = e at s = 2.
  CHECK(log_normal_ref().moment(2.0) == doctest::Approx(kE).epsilon(1e-13));
  // BetaRatio root at s = beta - alpha.
  CHECK(beta_ratio_ref().moment(1.0) == doctest::Approx(1.0).epsilon(1e-13));
  // Outside (-alpha, beta) the moment diverges.
  CHECK(std::isinf(beta_ratio_ref().moment(3.0)));
  CHECK(std::isinf(beta_ratio_ref().moment(-2.0)));
  CHECK(beta_ratio_ref().moment_domain_sup() == doctest::Approx(3.0));
}

TEST_CASE("moment is log-convex on its finite domain") {
  const std::vector<RhoFamily> fams{two_point_ref(), log_normal_ref(), beta_ratio_ref()};
  for (const auto& fam : fams) {
    const double hi = std::min(fam.moment_domain_sup() - 1e-6, 4.0);
    const int steps = 24;
    for (int i = 0; i + 2 < steps; ++i) {
      const double s1 = -1.0 + (hi + 1.0) * i / steps;
      const double s2 = -1.0 + (hi + 1.0) * (i + 1) / steps;
      const double s3 = -1.0 + (hi + 1.0) * (i + 2) / steps;
      if (!(s1 > -std::min(2.0, 1.0))) continue;  // keep BetaRatio inside (-alpha, beta)
      const double f1 = fam.log_moment(s1);
      const double f2 = fam.log_moment(s2);
      const double f3 = fam.log_moment(s3);
      const double interp = f1 + (f3 - f1) * (s2 - s1) / (s3 - s1);
      CHECK(f2 <= interp + 1e-12);
    }
  }
}

TEST_CASE("tilt closed forms") {
  const auto ln_t = log_normal_ref().tilt(1.0);
  CHECK(ln_t.kind() == RhoKind::LogNormal);
  CHECK(ln_t.param0() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(ln_t.param1() == doctest::Approx(1.0).epsilon(1e-12));

  const auto br_t = beta_ratio_ref().tilt(1.0);
  CHECK(br_t.param0() == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(br_t.param1() == doctest::Approx(2.0).epsilon(1e-12));

  const auto tp_t = two_point_ref().tilt(1.0);
  CHECK(tp_t.param2() == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  CHECK_THROWS_AS(log_normal_ref().tilt(0.7), std::invalid_argument);
  CHECK_THROWS_AS(log_normal_ref().tilt(-1.0), std::invalid_argument);
}

TEST_CASE("drift signs flip under the tilt") {
  for (const auto& fam : {two_point_ref(), log_normal_ref(), beta_ratio_ref()}) {
    CHECK(fam.mean_log() < 0.0);
    CHECK(fam.tilt(1.0).mean_log() > 0.0);
  }
}

TEST_CASE("kappa_log_moment closed forms") {
  CHECK(log_normal_ref().kappa_log_moment(1.0) == doctest::Approx(0.5).epsilon(1e-12));
  // (1/3) 2 log2 + (2/3)(1/2) log(1/2) = (1/3) log 2.
  CHECK(two_point_ref().kappa_log_moment(1.0) ==
        doctest::Approx(0.23104906018664842).epsilon(1e-12));
  // digamma(3) - digamma(2) = 1/2.
  CHECK(beta_ratio_ref().kappa_log_moment(1.0) == doctest::Approx(0.5).epsilon(1e-12));
  // Matches the tilted family's mean log step.
  for (const auto& fam : {two_point_ref(), log_normal_ref(), beta_ratio_ref()}) {
    CHECK(fam.kappa_log_moment(1.0) == doctest::Approx(fam.tilt(1.0).mean_log()).epsilon(1e-12));
  }
}

TEST_CASE("construction rejects bad parameters") {
  CHECK_THROWS_AS(RhoFamily::two_point(-1.0, 0.5, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(RhoFamily::two_point(2.0, 0.5, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(RhoFamily::two_point(2.0, 0.9, 0.9), DegenerateDriftError);
  CHECK_THROWS_AS(RhoFamily::log_normal(0.1, 1.0), DegenerateDriftError);
  CHECK_THROWS_AS(RhoFamily::log_normal(-0.5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(RhoFamily::beta_ratio(3.0, 2.0), DegenerateDriftError);
  CHECK_THROWS_AS(RhoFamily::beta_ratio(0.0, 2.0), std::invalid_argument);
}

TEST_CASE("lattice flag") {
  CHECK(two_point_ref().lattice());
  CHECK_FALSE(log_normal_ref().lattice());
  CHECK_FALSE(beta_ratio_ref().lattice());
}

TEST_CASE("monte carlo: tilted sampling matches tilted closed-form moments") {
  // E_tilt[rho^{-kappa} f(rho)] = E_mu[f(rho)] for f in {1, log rho, rho}.
  for (const auto& fam : {log_normal_ref(), beta_ratio_ref(), two_point_ref()}) {
    const auto tilted = fam.tilt(1.0);
    RngStream rng(31, 5);
    const int n = 200000;
    std::vector<double> f1(n), flog(n), fid(n);
    for (int i = 0; i < n; ++i) {
      const double lr = tilted.sample_log(rng);
      const double w = std::exp(-lr);  // rho^{-kappa}, kappa = 1
      f1[i] = w;
      flog[i] = w * lr;
      fid[i] = w * std::exp(lr);
    }
    const auto e1 = mean_ci(f1);
    const auto elog = mean_ci(flog);
    const auto eid = mean_ci(fid);
    CHECK(std::abs(e1.point - 1.0) < 3.5 * e1.se + 1e-12);
    CHECK(std::abs(elog.point - fam.mean_log()) < 3.5 * elog.se + 1e-12);
    CHECK(std::abs(eid.point - fam.moment(1.0)) < 3.5 * eid.se + 1e-12);
  }
}

TEST_CASE("monte carlo: girsanov identity on short paths") {
  // E^Q[phi(V_0..V_n)] = E^{Qtilde}[e^{-kappa V_n} phi(V_0..V_n)] for a
  // bounded phi; checked within 3 combined standard errors.
  const auto fam = beta_ratio_ref();
  const auto tilted = fam.tilt(1.0);
  const int n_steps = 5;
  const int n = 200000;
  const auto phi = [](double v_last, double v_mid) {
    return 1.0 / (1.0 + std::exp(v_last)) + 0.5 * std::cos(v_mid);
  };
  RngStream rng_q(33, 1), rng_t(33, 2);
  std::vector<double> qs(n), ts(n);
  for (int i = 0; i < n; ++i) {
    double v = 0.0, vmid = 0.0;
    for (int k = 1; k <= n_steps; ++k) {
      v += fam.sample_log(rng_q);
      if (k == 3) vmid = v;
    }
    qs[i] = phi(v, vmid);
    v = 0.0;
    vmid = 0.0;
    for (int k = 1; k <= n_steps; ++k) {
      v += tilted.sample_log(rng_t);
      if (k == 3) vmid = v;
    }
    ts[i] = std::exp(-v) * phi(v, vmid);
  }
  const auto eq = mean_ci(qs);
  const auto et = mean_ci(ts);
  CHECK(std::abs(eq.point - et.point) < 3.0 * std::hypot(eq.se, et.se));
}

TEST_CASE("bfamily moments and sampling") {
  const auto c = BFamily::constant(1.0);
  const auto e = BFamily::exponential(1.0);
  const auto u = BFamily::uniform(0.0, 2.0);
  CHECK(c.moment(2.5) == doctest::Approx(1.0));
  CHECK(e.moment(1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(e.moment(2.0) == doctest::Approx(2.0).epsilon(1e-12));  // Gamma(3) = 2
  CHECK(u.moment(1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(u.moment(2.0) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));

  RngStream a(41, 0), b(41, 0);
  CHECK(c.sample(a) == 1.0);
  // Constant B consumes no randomness.
  CHECK(a.next_u64() == b.next_u64());

  RngStream rng(41, 1);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += u.sample(rng);
  CHECK(std::abs(sum / n - 1.0) < 4.0 * (2.0 / std::sqrt(12.0)) / std::sqrt(1.0 * n));

  CHECK_THROWS_AS(BFamily::exponential(0.0), std::invalid_argument);
  CHECK_THROWS_AS(BFamily::uniform(2.0, 1.0), std::invalid_argument);
  CHECK(c.finite_moment(10.0));
}
