#pragma once

#include <string>

#include "perpetuity/rng.hpp"

namespace perpetuity {

enum class RhoKind { TwoPoint, LogNormal, BetaRatio };

// Measure a path is sampled under: the base law Q or the tilt Qtilde, whose
// step law is rho^kappa mu.
struct MeasureTag {
  enum class Base { Q, Qtilde };
  Base base = Base::Q;
  double kappa_used = 0.0;  // 0 for Q
};

// Parametric law mu of rho. Immutable and freely shareable across threads;
// all sampling state lives in the caller-supplied stream.
//
// Base families built through the factories always have E[log rho] < 0.
// Tilted families (from tilt()) have E[log rho] > 0 by construction.
class RhoFamily {
 public:
  // rho = a with probability p, else b. Always flagged lattice: log a / log b
  // being irrational is not something we can certify from doubles.
  static RhoFamily two_point(double a, double b, double p);
  // log rho ~ N(m, sigma^2), m < 0.
  static RhoFamily log_normal(double m, double sigma);
  // rho = W / (1 - W), W ~ Beta(alpha, beta); requires beta > alpha.
  static RhoFamily beta_ratio(double alpha, double beta);

  RhoKind kind() const { return kind_; }
  bool lattice() const { return lattice_; }

  double sample(RngStream& rng) const;
  double sample_log(RngStream& rng) const;  // one draw of log rho

  // E[rho^s]; +infinity when the moment diverges.
  double moment(double s) const;
  double log_moment(double s) const;
  // sup of {s : moment(s) < inf}; +infinity for TwoPoint and LogNormal.
  double moment_domain_sup() const;

  double mean_log() const;  // E[log rho]

  // The family of rho^kappa mu. Requires moment(kappa) = 1 within
  // kMomentTolerance (relative).
  RhoFamily tilt(double kappa) const;
  // E[rho^kappa log rho] = mean_log of the tilted family. Same precondition.
  double kappa_log_moment(double kappa) const;

  double param0() const { return p0_; }
  double param1() const { return p1_; }
  double param2() const { return p2_; }
  std::string describe() const;

  static constexpr double kMomentTolerance = 1e-9;

 private:
  RhoFamily(RhoKind kind, double p0, double p1, double p2, bool lattice);
  void require_unit_moment(double kappa) const;

  RhoKind kind_;
  double p0_, p1_, p2_;  // TwoPoint: a, b, p; LogNormal: m, sigma, -; BetaRatio: alpha, beta, -
  bool lattice_;
};

// Positive i.i.d. weights B for the generalized series R^B. All shipped
// variants have E[B^s] < infinity for every s > 0.
class BFamily {
 public:
  enum class Kind { Constant, Exponential, Uniform };

  static BFamily constant(double value = 1.0);
  static BFamily exponential(double rate);
  static BFamily uniform(double lo, double hi);

  Kind kind() const { return kind_; }
  double sample(RngStream& rng) const;
  double moment(double s) const;  // E[B^s]
  double mean() const { return moment(1.0); }
  bool finite_moment(double /*s*/) const { return true; }

  double param0() const { return p0_; }
  double param1() const { return p1_; }
  std::string describe() const;

 private:
  BFamily(Kind kind, double p0, double p1) : kind_(kind), p0_(p0), p1_(p1) {}

  Kind kind_;
  double p0_, p1_;
};

}  // namespace perpetuity
