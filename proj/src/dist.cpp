#include "perpetuity/dist.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "perpetuity/errors.hpp"

namespace perpetuity {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double lgamma_pos(double x) { return boost::math::lgamma(x); }

}  // namespace

RhoFamily::RhoFamily(RhoKind kind, double p0, double p1, double p2, bool lattice)
    : kind_(kind), p0_(p0), p1_(p1), p2_(p2), lattice_(lattice) {}

RhoFamily RhoFamily::two_point(double a, double b, double p) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("two_point: a, b must be positive");
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("two_point: p must lie in (0,1)");
  if (!(p * std::log(a) + (1.0 - p) * std::log(b) < 0.0)) {
    throw DegenerateDriftError("two_point: E[log rho] >= 0");
  }
  return RhoFamily(RhoKind::TwoPoint, a, b, p, /*lattice=*/true);
}

RhoFamily RhoFamily::log_normal(double m, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("log_normal: sigma must be positive");
  if (!(m < 0.0)) throw DegenerateDriftError("log_normal: E[log rho] = m >= 0");
  return RhoFamily(RhoKind::LogNormal, m, sigma, 0.0, /*lattice=*/false);
}

RhoFamily RhoFamily::beta_ratio(double alpha, double beta) {
  if (!(alpha > 0.0) || !(beta > 0.0)) {
    throw std::invalid_argument("beta_ratio: alpha, beta must be positive");
  }
  if (!(beta > alpha)) {
    // digamma is strictly increasing, so E[log rho] = psi(alpha) - psi(beta) < 0
    // iff alpha < beta; beta > alpha is also what makes a positive kappa exist.
    throw DegenerateDriftError("beta_ratio: requires beta > alpha");
  }
  return RhoFamily(RhoKind::BetaRatio, alpha, beta, 0.0, /*lattice=*/false);
}

double RhoFamily::sample(RngStream& rng) const {
  switch (kind_) {
    case RhoKind::TwoPoint:
      return rng.uniform() < p2_ ? p0_ : p1_;
    case RhoKind::LogNormal:
      return std::exp(p0_ + p1_ * rng.normal());
    case RhoKind::BetaRatio: {
      // W/(1-W) with W = G_a/(G_a+G_b) is just the gamma ratio G_a/G_b.
      const double ga = rng.gamma(p0_);
      const double gb = rng.gamma(p1_);
      return ga / gb;
    }
  }
  throw std::logic_error("unreachable");
}

double RhoFamily::sample_log(RngStream& rng) const {
  switch (kind_) {
    case RhoKind::TwoPoint:
      return rng.uniform() < p2_ ? std::log(p0_) : std::log(p1_);
    case RhoKind::LogNormal:
      return p0_ + p1_ * rng.normal();
    case RhoKind::BetaRatio: {
      const double ga = rng.gamma(p0_);
      const double gb = rng.gamma(p1_);
      return std::log(ga) - std::log(gb);
    }
  }
  throw std::logic_error("unreachable");
}

double RhoFamily::log_moment(double s) const {
  switch (kind_) {
    case RhoKind::TwoPoint: {
      const double la = s * std::log(p0_);
      const double lb = s * std::log(p1_);
      const double m = std::max(la, lb);
      return m + std::log(p2_ * std::exp(la - m) + (1.0 - p2_) * std::exp(lb - m));
    }
    case RhoKind::LogNormal:
      return p0_ * s + 0.5 * s * s * p1_ * p1_;
    case RhoKind::BetaRatio: {
      if (!(s > -p0_ && s < p1_)) return kInf;
      // B(alpha+s, beta-s) / B(alpha, beta), Gamma(alpha+beta) cancels.
      return lgamma_pos(p0_ + s) + lgamma_pos(p1_ - s) - lgamma_pos(p0_) - lgamma_pos(p1_);
    }
  }
  throw std::logic_error("unreachable");
}

double RhoFamily::moment(double s) const {
  const double lm = log_moment(s);
  return std::isinf(lm) ? kInf : std::exp(lm);
}

double RhoFamily::moment_domain_sup() const {
  return kind_ == RhoKind::BetaRatio ? p1_ : kInf;
}

double RhoFamily::mean_log() const {
  switch (kind_) {
    case RhoKind::TwoPoint:
      return p2_ * std::log(p0_) + (1.0 - p2_) * std::log(p1_);
    case RhoKind::LogNormal:
      return p0_;
    case RhoKind::BetaRatio:
      return boost::math::digamma(p0_) - boost::math::digamma(p1_);
  }
  throw std::logic_error("unreachable");
}

void RhoFamily::require_unit_moment(double kappa) const {
  if (!(kappa > 0.0)) throw std::invalid_argument("tilt: kappa must be positive");
  const double m = moment(kappa);
  if (!(std::abs(m - 1.0) <= kMomentTolerance)) {
    throw std::invalid_argument("tilt: E[rho^kappa] != 1; kappa does not match this family");
  }
}

RhoFamily RhoFamily::tilt(double kappa) const {
  require_unit_moment(kappa);
  switch (kind_) {
    case RhoKind::TwoPoint: {
      // p~ = p a^kappa / E[rho^kappa]; the normalizer is 1 within tolerance
      // but dividing keeps the tilted p exact.
      const double wa = p2_ * std::pow(p0_, kappa);
      const double wb = (1.0 - p2_) * std::pow(p1_, kappa);
      return RhoFamily(RhoKind::TwoPoint, p0_, p1_, wa / (wa + wb), lattice_);
    }
    case RhoKind::LogNormal:
      return RhoFamily(RhoKind::LogNormal, p0_ + kappa * p1_ * p1_, p1_, 0.0, lattice_);
    case RhoKind::BetaRatio:
      return RhoFamily(RhoKind::BetaRatio, p0_ + kappa, p1_ - kappa, 0.0, lattice_);
  }
  throw std::logic_error("unreachable");
}

double RhoFamily::kappa_log_moment(double kappa) const {
  require_unit_moment(kappa);
  switch (kind_) {
    case RhoKind::TwoPoint:
      return p2_ * std::pow(p0_, kappa) * std::log(p0_) +
             (1.0 - p2_) * std::pow(p1_, kappa) * std::log(p1_);
    case RhoKind::LogNormal:
      return p0_ + kappa * p1_ * p1_;
    case RhoKind::BetaRatio:
      return boost::math::digamma(p0_ + kappa) - boost::math::digamma(p1_ - kappa);
  }
  throw std::logic_error("unreachable");
}

std::string RhoFamily::describe() const {
  char buf[128];
  switch (kind_) {
    case RhoKind::TwoPoint:
      std::snprintf(buf, sizeof buf, "two_point(a=%g b=%g p=%g)", p0_, p1_, p2_);
      break;
    case RhoKind::LogNormal:
      std::snprintf(buf, sizeof buf, "log_normal(m=%g sigma=%g)", p0_, p1_);
      break;
    case RhoKind::BetaRatio:
      std::snprintf(buf, sizeof buf, "beta_ratio(alpha=%g beta=%g)", p0_, p1_);
      break;
  }
  return buf;
}

BFamily BFamily::constant(double value) {
  if (!(value > 0.0)) throw std::invalid_argument("BFamily::constant: value must be positive");
  return BFamily(Kind::Constant, value, 0.0);
}

BFamily BFamily::exponential(double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("BFamily::exponential: rate must be positive");
  return BFamily(Kind::Exponential, rate, 0.0);
}

BFamily BFamily::uniform(double lo, double hi) {
  if (!(lo >= 0.0 && hi > lo)) {
    throw std::invalid_argument("BFamily::uniform: requires 0 <= lo < hi");
  }
  return BFamily(Kind::Uniform, lo, hi);
}

double BFamily::sample(RngStream& rng) const {
  switch (kind_) {
    case Kind::Constant:
      return p0_;  // consumes no randomness
    case Kind::Exponential:
      return rng.exponential(p0_);
    case Kind::Uniform:
      return p0_ + (p1_ - p0_) * rng.uniform();
  }
  throw std::logic_error("unreachable");
}

double BFamily::moment(double s) const {
  switch (kind_) {
    case Kind::Constant:
      return std::pow(p0_, s);
    case Kind::Exponential:
      return std::exp(lgamma_pos(1.0 + s) - s * std::log(p0_));
    case Kind::Uniform: {
      if (s == -1.0) throw std::invalid_argument("BFamily::moment: s = -1 for uniform");
      const double num = std::pow(p1_, s + 1.0) - std::pow(p0_, s + 1.0);
      return num / ((s + 1.0) * (p1_ - p0_));
    }
  }
  throw std::logic_error("unreachable");
}

std::string BFamily::describe() const {
  char buf[96];
  switch (kind_) {
    case Kind::Constant:
      std::snprintf(buf, sizeof buf, "constant(%g)", p0_);
      break;
    case Kind::Exponential:
      std::snprintf(buf, sizeof buf, "exponential(rate=%g)", p0_);
      break;
    case Kind::Uniform:
      std::snprintf(buf, sizeof buf, "uniform(lo=%g hi=%g)", p0_, p1_);
      break;
  }
  return buf;
}

}  // namespace perpetuity
