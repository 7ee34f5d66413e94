#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "perpetuity/dist.hpp"

namespace perpetuity {

// Everything a run needs. Defaults here are the documented defaults; the
// config file overrides them, the PERPETUITY_SEED environment variable
// overrides the seed, and command-line flags override everything.
struct RunConfig {
  std::optional<RhoFamily> family;
  std::optional<BFamily> bfamily;
  std::optional<double> kappa_override;

  std::size_t n = 10000;                     // replicas for the main estimator
  std::optional<std::size_t> n_excursions;   // defaults to n
  std::optional<std::size_t> n_tail;         // direct R samples; defaults to n

  double A = 25.0;
  double eps_bias = 1e-4;
  double eps_cert = 1e-4;
  double rel_tol = 1e-6;
  double ci_level = 0.95;

  std::uint64_t seed = 20260809;
  int workers = 1;
  std::string out_dir = ".";

  std::optional<double> t_min, t_max;
  std::size_t t_points = 40;

  double lambda_min = 3e-9;
  double lambda_max = 1e-5;
  std::size_t lambda_points = 5;
  double h_coeff = 2.0 / 3.0;

  bool force_lattice = false;

  std::size_t excursions() const { return n_excursions.value_or(n); }
  std::size_t tail_samples() const { return n_tail.value_or(n); }
};

// Flat `key = value` text with inline tables for the family specs:
//
//   family  = { kind = "beta_ratio", alpha = 2.0, beta = 3.0 }
//   bfamily = { kind = "exponential", rate = 1.0 }
//   n = 100000
//   seed = 42
//
// '#' starts a comment. Unknown keys are errors. Throws ConfigError.
void apply_config_file(RunConfig& config, const std::string& path);

// PERPETUITY_SEED, when set, overrides the seed.
void apply_env_overrides(RunConfig& config);

// Invariant checks: family present, n >= 1, A > 0, tolerances in (0,1),
// workers >= 1, grids well ordered. Throws ConfigError.
void validate(const RunConfig& config);

RhoFamily make_family(const std::string& kind, double a, double b, double p, double m,
                      double sigma, double alpha, double beta);
BFamily make_bfamily(const std::string& kind, double value, double rate, double lo, double hi);

}  // namespace perpetuity
