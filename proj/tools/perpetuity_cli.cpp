// perpetuity: Monte Carlo estimation of the tail constants of the renewal
// series R = 1 + sum_k rho_1...rho_k, cross-validated against direct
// empirical tail fits.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "perpetuity/config.hpp"
#include "perpetuity/constants.hpp"
#include "perpetuity/csv.hpp"
#include "perpetuity/errors.hpp"
#include "perpetuity/functionals.hpp"
#include "perpetuity/kappa.hpp"
#include "perpetuity/paths.hpp"
#include "perpetuity/runner.hpp"
#include "perpetuity/stats.hpp"

namespace {

using namespace perpetuity;

constexpr int kExitConfig = 2;
constexpr int kExitLattice = 3;
constexpr int kExitCap = 4;

struct Cli {
  RunConfig cfg;
  std::string subcommand;
  bool dump_paths = false;
  bool dump_replicas = false;
};

void meta_header(CsvBuilder& b) {
  b.field("seed").field("n").field("A").field("eps_bias").field("eps_cert");
}

void meta_fields(CsvBuilder& b, const RunConfig& cfg, std::size_t n) {
  b.field(cfg.seed).field(n).field(cfg.A).field(cfg.eps_bias).field(cfg.eps_cert);
}

std::string out_path(const RunConfig& cfg, const char* name) {
  std::filesystem::create_directories(cfg.out_dir);
  return (std::filesystem::path(cfg.out_dir) / name).string();
}

double resolve_kappa(const RunConfig& cfg, const RhoFamily& family) {
  if (cfg.kappa_override) {
    const double k = *cfg.kappa_override;
    if (!(k > 0.0) || std::abs(family.moment(k) - 1.0) > RhoFamily::kMomentTolerance) {
      throw ConfigError("kappa override does not satisfy E[rho^kappa] = 1");
    }
    return k;
  }
  return solve_kappa(*cfg.family).kappa;
}

void lattice_guard(const RunConfig& cfg, const char* what) {
  if (!cfg.family->lattice()) return;
  if (cfg.force_lattice) {
    std::fprintf(stderr,
                 "warning: lattice family; the t^-kappa tail equivalence oscillates and %s "
                 "output is not interpretable as a tail constant\n",
                 what);
    return;
  }
  std::fprintf(stderr,
               "error: %s requires a non-lattice family (log rho on a grid breaks the "
               "t^-kappa equivalence); pass --force-lattice to run anyway\n",
               what);
  std::exit(kExitLattice);
}

void warn_lattice(const RunConfig& cfg) {
  if (cfg.family->lattice()) {
    std::fprintf(stderr,
                 "warning: lattice family; representation-side quantities are computed but the "
                 "t^-kappa tail constants are not defined for arithmetic log rho\n");
  }
}

ConstantsOptions constants_options(const RunConfig& cfg) {
  ConstantsOptions opt;
  opt.n_m = cfg.n;
  opt.n_excursions = cfg.excursions();
  opt.A = cfg.A;
  opt.eps_bias = cfg.eps_bias;
  opt.eps_cert = cfg.eps_cert;
  opt.ci_level = cfg.ci_level;
  opt.bfam = cfg.bfamily;
  return opt;
}

TailGridSpec tail_grid_spec(const RunConfig& cfg) {
  TailGridSpec spec;
  spec.t_min = cfg.t_min;
  spec.t_max = cfg.t_max;
  spec.points = cfg.t_points;
  return spec;
}

std::vector<double> lambda_grid(const RunConfig& cfg) {
  std::vector<double> grid;
  if (cfg.lambda_points == 1) {
    grid.push_back(cfg.lambda_min);
    return grid;
  }
  const double step = (std::log(cfg.lambda_min) - std::log(cfg.lambda_max)) /
                      static_cast<double>(cfg.lambda_points - 1);
  for (std::size_t j = 0; j < cfg.lambda_points; ++j) {
    grid.push_back(std::exp(std::log(cfg.lambda_max) + step * static_cast<double>(j)));
  }
  return grid;
}

void append_tail_grid(CsvBuilder& grid_csv, const RunConfig& cfg, const char* kind,
                      const TailFit& fit) {
  for (std::size_t i = 0; i < fit.t_grid.size(); ++i) {
    grid_csv.field(kind)
        .field(fit.t_grid[i])
        .field(fit.tail[i])
        .field(fit.scaled[i])
        .field(fit.exceedances[i]);
    meta_fields(grid_csv, cfg, fit.n_samples);
    grid_csv.end_row();
  }
}

void append_tail_fit(CsvBuilder& fit_csv, const RunConfig& cfg, const char* kind,
                     const TailFit& fit) {
  fit_csv.field(kind).field(fit.has_plateau).field(fit.fitted_constant).field(fit.fit_se());
  if (fit.has_plateau) {
    fit_csv.field(fit.t_grid[fit.window_lo])
        .field(fit.t_grid[fit.window_hi])
        .field(fit.max_drift)
        .field(fit.n_exceed_hi);
  } else {
    fit_csv.field("nan").field("nan").field("nan").field(std::uint64_t{0});
  }
  meta_fields(fit_csv, cfg, fit.n_samples);
  fit_csv.end_row();
}

// Agreement rule used by compare/ztail rows: within `rel` relative error or
// overlapping confidence intervals, whichever is looser.
bool agree(double a, double se_a, double d, double interval_d, double rel, double z) {
  const double rel_gap = std::abs(a - d) / std::max(std::abs(a), std::abs(d));
  if (rel_gap <= rel) return true;
  const double lo_a = a - z * se_a, hi_a = a + z * se_a;
  const double lo_d = d - interval_d, hi_d = d + interval_d;
  return std::max(lo_a, lo_d) <= std::min(hi_a, hi_d);
}

int cmd_kappa(const RunConfig& cfg) {
  const KappaResult kr = solve_kappa(*cfg.family);
  CsvBuilder b;
  b.field("family").field("kappa").field("residual").field("bracket_lo").field("bracket_hi");
  meta_header(b);
  b.end_row();
  b.field(cfg.family->describe())
      .field(kr.kappa)
      .field(kr.residual)
      .field(kr.bracket_lo)
      .field(kr.bracket_hi);
  meta_fields(b, cfg, cfg.n);
  b.end_row();
  write_text_file(out_path(cfg, "kappa.csv"), b.str());
  std::printf("kappa=%.12g residual=%.3g bracket=[%.6g, %.6g]\n", kr.kappa, kr.residual,
              kr.bracket_lo, kr.bracket_hi);
  return 0;
}

void constant_row(CsvBuilder& b, const RunConfig& cfg, const char* name, double value,
                  double se, std::size_t n) {
  b.field(name).field(value).field(se).field(n).field(cfg.A).field(cfg.eps_bias)
      .field(cfg.eps_cert).field(cfg.seed);
  b.end_row();
}

int cmd_constants(const Cli& cli) {
  const RunConfig& cfg = cli.cfg;
  warn_lattice(cfg);
  const ParallelSpec par{cfg.seed, cfg.workers};
  ConstantsOptions opt = constants_options(cfg);
  const ConstantsBundle bundle = run_constants_pipeline(*cfg.family, opt, par);
  const ConstantsSet& cs = bundle.constants;

  CsvBuilder b;
  b.field("name").field("point").field("stderr").field("n").field("A").field("eps_bias")
      .field("eps_cert").field("seed");
  b.end_row();
  const std::size_t ne = opt.n_excursions;
  constant_row(b, cfg, "C_F", cs.c_f.value, cs.c_f.se, ne);
  constant_row(b, cfg, "C_I", cs.c_i.value, cs.c_i.se, ne);
  constant_row(b, cfg, "E_M_kappa", cs.em.value, cs.em.se, opt.n_m);
  constant_row(b, cfg, "C_K", cs.c_k.value, cs.c_k.se, opt.n_m);
  constant_row(b, cfg, "C_KI", cs.c_ki.value, cs.c_ki.se, opt.n_m);
  constant_row(b, cfg, "C_KI_alt", cs.c_ki_alt.value, cs.c_ki_alt.se, opt.n_m);
  constant_row(b, cfg, "C_U", cs.c_u.value, cs.c_u.se, opt.n_m);
  if (cs.emb) {
    constant_row(b, cfg, "E_MB_kappa", cs.emb->value, cs.emb->se, opt.n_m);
    constant_row(b, cfg, "C_KB", cs.c_kb->value, cs.c_kb->se, opt.n_m);
  }
  write_text_file(out_path(cfg, "constants.csv"), b.str());
  std::printf("kappa=%.9g C_F=%.6g C_I=%.6g E[M^k]=%.6g C_K=%.6g C_U=%.6g\n",
              bundle.kappa.kappa, cs.c_f.value, cs.c_i.value, cs.em.value, cs.c_k.value,
              cs.c_u.value);

  if (cli.dump_replicas) {
    // Re-running the phase reproduces the pipeline's replicas bit-exactly.
    const double kappa = bundle.kappa.kappa;
    CsvBuilder d;
    d.field("kind").field("value").field("trunc_level").field("trunc_error_bound")
        .field("seed").field("stream_id").end_row();
    const auto dump = [&](const std::vector<FunctionalSample>& samples, const char* kind,
                          std::uint64_t phase) {
      for (std::size_t i = 0; i < samples.size(); ++i) {
        d.field(kind)
            .field(samples[i].value)
            .field(samples[i].trunc_level)
            .field(samples[i].trunc_error_bound)
            .field(cfg.seed)
            .field(stream_id(phase, i));
        d.end_row();
      }
    };
    dump(run_m_replicas(*cfg.family, kappa, opt.n_m, opt.A, opt.eps_bias, bundle.trunc_calib,
                        par, opt.m_phase),
         "M", opt.m_phase);
    if (cfg.bfamily) {
      dump(run_m_replicas(*cfg.family, kappa, opt.n_m, opt.A, opt.eps_bias,
                          bundle.trunc_calib, par, opt.mb_phase, cfg.bfamily),
           "MB", opt.mb_phase);
    }
    write_text_file(out_path(cfg, "m_replicas.csv"), d.str());
  }

  if (cli.dump_paths) {
    const double kappa = bundle.kappa.kappa;
    RngStream rng(cfg.seed, stream_id(stream_phase::m_replicas, cfg.n + 1));
    const WalkPath left = sample_stay_nonneg_left(*cfg.family, kappa, cfg.A, rng, cfg.eps_bias);
    const WalkPath right =
        sample_stay_positive_tilted(*cfg.family, kappa, cfg.A, rng, cfg.eps_bias);
    CsvBuilder d;
    d.field("branch").field("k").field("v").end_row();
    for (std::size_t k = 0; k < left.values.size(); ++k) {
      d.field("left").field(-static_cast<double>(k)).field(left.values[k]).end_row();
    }
    for (std::size_t k = 0; k < right.values.size(); ++k) {
      d.field("right").field(static_cast<double>(k)).field(right.values[k]).end_row();
    }
    write_text_file(out_path(cfg, "paths_sample.csv"), d.str());
  }
  return 0;
}

int cmd_tail(const RunConfig& cfg) {
  lattice_guard(cfg, "tail");
  const double kappa = resolve_kappa(cfg, *cfg.family);
  const ParallelSpec par{cfg.seed, cfg.workers};

  CsvBuilder grid_csv, fit_csv;
  grid_csv.field("kind").field("t").field("tail").field("scaled").field("exceedances");
  meta_header(grid_csv);
  grid_csv.end_row();
  fit_csv.field("kind").field("has_plateau").field("fitted_constant").field("fit_se")
      .field("t_lo").field("t_hi").field("max_drift").field("n_exceed_hi");
  meta_header(fit_csv);
  fit_csv.end_row();

  const RStoppingRule rule = make_r_stopping_rule(*cfg.family, kappa, cfg.rel_tol, cfg.eps_cert);
  const TailFit fit = direct_tail_fit(
      run_r_samples(*cfg.family, cfg.tail_samples(), rule, par), kappa, tail_grid_spec(cfg));
  append_tail_grid(grid_csv, cfg, "R", fit);
  append_tail_fit(fit_csv, cfg, "R", fit);
  std::printf("R: plateau=%d fitted=%.6g\n", fit.has_plateau ? 1 : 0, fit.fitted_constant);

  if (cfg.bfamily) {
    const RStoppingRule rb_rule =
        make_r_stopping_rule(*cfg.family, kappa, cfg.rel_tol, cfg.eps_cert, cfg.bfamily);
    const TailFit rb_fit = direct_tail_fit(
        run_r_samples(*cfg.family, cfg.tail_samples(), rb_rule, par, stream_phase::rb_samples,
                      cfg.bfamily),
        kappa, tail_grid_spec(cfg));
    append_tail_grid(grid_csv, cfg, "RB", rb_fit);
    append_tail_fit(fit_csv, cfg, "RB", rb_fit);
    std::printf("RB: plateau=%d fitted=%.6g\n", rb_fit.has_plateau ? 1 : 0,
                rb_fit.fitted_constant);
  }
  write_text_file(out_path(cfg, "tail_grid.csv"), grid_csv.str());
  write_text_file(out_path(cfg, "tail_fit.csv"), fit_csv.str());
  return 0;
}

int cmd_compare(const RunConfig& cfg) {
  lattice_guard(cfg, "compare");
  const ParallelSpec par{cfg.seed, cfg.workers};
  const ConstantsBundle bundle = run_constants_pipeline(*cfg.family, constants_options(cfg), par);
  const double kappa = bundle.kappa.kappa;
  const double z = normal_quantile(0.5 + cfg.ci_level / 2.0);

  CsvBuilder b;
  b.field("kind").field("assembled").field("assembled_se").field("direct").field("direct_se")
      .field("max_drift").field("rel_diff").field("pass");
  meta_header(b);
  b.end_row();

  const auto one = [&](const char* kind, const ConstantValue& assembled,
                       const std::optional<BFamily>& bfam, std::uint64_t phase) {
    const RStoppingRule rule =
        make_r_stopping_rule(*cfg.family, kappa, cfg.rel_tol, cfg.eps_cert, bfam);
    const TailFit fit = direct_tail_fit(
        run_r_samples(*cfg.family, cfg.tail_samples(), rule, par, phase, bfam), kappa,
        tail_grid_spec(cfg));
    const double direct = fit.fitted_constant;
    const double rel = fit.has_plateau
                           ? std::abs(assembled.value - direct) /
                                 std::max(std::abs(assembled.value), std::abs(direct))
                           : std::numeric_limits<double>::quiet_NaN();
    const double interval_d = z * fit.fit_se() + fit.max_drift * direct;
    const bool pass = fit.has_plateau &&
                      agree(assembled.value, assembled.se, direct, interval_d, 0.10, z);
    b.field(kind).field(assembled.value).field(assembled.se).field(direct).field(fit.fit_se())
        .field(fit.max_drift).field(rel).field(pass);
    meta_fields(b, cfg, cfg.tail_samples());
    b.end_row();
    std::printf("%s: assembled=%.6g direct=%.6g rel_diff=%.3g pass=%d\n", kind,
                assembled.value, direct, rel, pass ? 1 : 0);
  };

  one("C_K_vs_R_tail", bundle.constants.c_k, std::nullopt, stream_phase::r_samples);
  if (bundle.constants.c_kb) {
    one("C_KB_vs_RB_tail", *bundle.constants.c_kb, cfg.bfamily, stream_phase::rb_samples);
  }
  write_text_file(out_path(cfg, "compare.csv"), b.str());
  return 0;
}

int cmd_ztail(const RunConfig& cfg) {
  lattice_guard(cfg, "ztail");
  const ParallelSpec par{cfg.seed, cfg.workers};
  const ConstantsBundle bundle = run_constants_pipeline(*cfg.family, constants_options(cfg), par);
  const double kappa = bundle.kappa.kappa;
  const double z = normal_quantile(0.5 + cfg.ci_level / 2.0);

  const ConditionedRun run =
      run_conditioned(*cfg.family, kappa, cfg.n, cfg.A, cfg.eps_cert, cfg.eps_bias,
                      bundle.trunc_calib, par);
  std::vector<double> zbars;
  zbars.reserve(run.accepted.size());
  for (const auto& rec : run.accepted) zbars.push_back(rec.zbar);
  const TailFit fit = direct_tail_fit(std::move(zbars), kappa, tail_grid_spec(cfg));

  const double p_hs = run.p_h_equals_s();
  const double p_lo = binomial_ci_lower(run.accepted.size(), run.attempts_used, cfg.ci_level);
  const double p_hi = binomial_ci_upper(run.accepted.size(), run.attempts_used, cfg.ci_level);
  const double target = bundle.constants.c_u.value / p_hs;
  // Interval on the target from C_U noise plus the binomial range on P(H=S).
  const double target_half =
      z * bundle.constants.c_u.se / p_hs +
      bundle.constants.c_u.value * (1.0 / p_lo - 1.0 / p_hi) / 2.0;
  const double interval_d = z * fit.fit_se() + fit.max_drift * fit.fitted_constant;
  const bool pass =
      fit.has_plateau &&
      agree(target, target_half / z, fit.fitted_constant, interval_d, 0.15, z);

  CsvBuilder grid_csv;
  grid_csv.field("kind").field("t").field("tail").field("scaled").field("exceedances");
  meta_header(grid_csv);
  grid_csv.end_row();
  append_tail_grid(grid_csv, cfg, "Z", fit);
  write_text_file(out_path(cfg, "ztail_grid.csv"), grid_csv.str());

  CsvBuilder b;
  b.field("fitted").field("fit_se").field("p_hs").field("p_hs_lo").field("p_hs_hi")
      .field("target").field("ratio").field("pass");
  meta_header(b);
  b.end_row();
  b.field(fit.fitted_constant).field(fit.fit_se()).field(p_hs).field(p_lo).field(p_hi)
      .field(target).field(fit.fitted_constant / target).field(pass);
  meta_fields(b, cfg, cfg.n);
  b.end_row();
  write_text_file(out_path(cfg, "ztail.csv"), b.str());
  std::printf("Z tail: fitted=%.6g target=C_U/P(H=S)=%.6g ratio=%.4g pass=%d\n",
              fit.fitted_constant, target, fit.fitted_constant / target, pass ? 1 : 0);
  return 0;
}

int cmd_tauberian(const RunConfig& cfg) {
  lattice_guard(cfg, "tauberian");
  const ParallelSpec par{cfg.seed, cfg.workers};
  const ConstantsBundle bundle = run_constants_pipeline(*cfg.family, constants_options(cfg), par);
  const double kappa = bundle.kappa.kappa;
  if (!(kappa < 1.0)) {
    throw KappaNotSubcriticalError("tauberian: requires kappa < 1");
  }

  const std::vector<double> lambdas = lambda_grid(cfg);
  std::vector<double> h_levels;
  for (double l : lambdas) h_levels.push_back(tauberian_h(l, cfg.h_coeff));
  const double z_min_h = *std::min_element(h_levels.begin(), h_levels.end());

  const ConditionedRun run =
      run_conditioned(*cfg.family, kappa, cfg.n, cfg.A, cfg.eps_cert, cfg.eps_bias,
                      bundle.trunc_calib, par, stream_phase::conditioned, h_levels, z_min_h);
  const auto rows =
      tauberian_rows(run, kappa, bundle.constants.c_u.value, lambdas, cfg.h_coeff,
                     cfg.ci_level);

  CsvBuilder b;
  b.field("lambda").field("h").field("n_kept").field("estimate").field("stderr")
      .field("p_h_raw").field("target").field("ratio");
  meta_header(b);
  b.end_row();
  for (const auto& row : rows) {
    b.field(row.lambda).field(row.h).field(row.n_kept).field(row.estimate).field(row.se)
        .field(row.p_h_raw).field(row.target).field(row.ratio);
    meta_fields(b, cfg, cfg.n);
    b.end_row();
    std::printf("lambda=%.3g h=%.3g kept=%zu estimate=%.5g target=%.5g ratio=%.4g\n",
                row.lambda, row.h, row.n_kept, row.estimate, row.target, row.ratio);
  }
  write_text_file(out_path(cfg, "tauberian.csv"), b.str());
  return 0;
}

int cmd_symmetry(const RunConfig& cfg) {
  const ParallelSpec par{cfg.seed, cfg.workers};
  const double kappa = resolve_kappa(cfg, *cfg.family);
  RngStream cal_rng(cfg.seed, stream_id(stream_phase::trunc_calib, 0));
  const TruncationCalibration calib = calibrate_truncation(*cfg.family, kappa, 2000, cal_rng);

  // Split halves keep the two KS samples independent: the reversal maps M1
  // to M2 on the same path, so same-replica pairs would be correlated.
  const ConditionedRun run = run_conditioned(*cfg.family, kappa, 2 * cfg.n, cfg.A,
                                             cfg.eps_cert, cfg.eps_bias, calib, par);
  std::vector<double> m1, m2, fwd, rev;
  for (std::size_t i = 0; i < run.accepted.size(); ++i) {
    const auto& rec = run.accepted[i];
    if (i % 2 == 0) {
      m1.push_back(rec.m1bar);
      if (rec.has_ascent) fwd.push_back(rec.v1_fwd);
    } else {
      m2.push_back(rec.m2bar);
      if (rec.has_ascent) rev.push_back(rec.v1_rev);
    }
  }
  const KsResult ks_m = ks_two_sample(m1, m2);
  const KsResult ks_step = ks_two_sample(fwd, rev);

  CsvBuilder b;
  b.field("test").field("D").field("p_value").field("n_x").field("n_y").field("pass");
  meta_header(b);
  b.end_row();
  const auto row = [&](const char* name, const KsResult& ks, std::size_t nx, std::size_t ny) {
    b.field(name).field(ks.statistic).field(ks.p_value).field(nx).field(ny)
        .field(ks.p_value > 0.01);
    meta_fields(b, cfg, cfg.n);
    b.end_row();
    std::printf("%s: D=%.4g p=%.4g\n", name, ks.statistic, ks.p_value);
  };
  row("m1_vs_m2", ks_m, m1.size(), m2.size());
  row("ascent_first_step_reversal", ks_step, fwd.size(), rev.size());
  write_text_file(out_path(cfg, "symmetry.csv"), b.str());
  return 0;
}

int cmd_mountain(const RunConfig& cfg) {
  const ParallelSpec par{cfg.seed, cfg.workers};
  const double kappa = resolve_kappa(cfg, *cfg.family);
  RngStream cal_rng(cfg.seed, stream_id(stream_phase::ladder_calib, 0));
  const LadderCalibration calib =
      calibrate_ladder(*cfg.family, kappa, std::max<std::size_t>(2000, cfg.n / 5), cal_rng);

  const MountainRun mrun = run_mountain(*cfg.family, kappa, cfg.n, cfg.eps_bias, calib, par);
  const std::vector<double> direct = run_direct_s(*cfg.family, kappa, cfg.n, cfg.eps_cert, par);
  const std::vector<double> ones(direct.size(), 1.0);
  const KsResult ks = ks_two_sample_weighted(mrun.s_values, mrun.weights, direct, ones);

  const EstimateWithCI mean_w = mean_ci(mrun.weights, cfg.ci_level);
  const double z = normal_quantile(0.5 + cfg.ci_level / 2.0);
  const double diff = std::abs(mean_w.point - calib.z_hat());
  const double combined = std::hypot(mean_w.se, calib.z_se());
  const bool weight_ok = diff <= z * combined;

  CsvBuilder b;
  b.field("check").field("lhs").field("rhs").field("stat").field("p_value").field("pass");
  meta_header(b);
  b.end_row();
  b.field("weighted_ks_s_law").field(0.0).field(0.0).field(ks.statistic).field(ks.p_value)
      .field(ks.p_value > 0.01);
  meta_fields(b, cfg, cfg.n);
  b.end_row();
  b.field("importance_weight_normalizer").field(mean_w.point).field(calib.z_hat())
      .field(diff / combined).field(0.0).field(weight_ok);
  meta_fields(b, cfg, cfg.n);
  b.end_row();
  write_text_file(out_path(cfg, "mountain.csv"), b.str());
  std::printf("S law: D=%.4g p=%.4g; mean weight=%.5g vs Z=%.5g\n", ks.statistic, ks.p_value,
              mean_w.point, calib.z_hat());
  return 0;
}

int dispatch(const Cli& cli) {
  if (cli.subcommand == "kappa") return cmd_kappa(cli.cfg);
  if (cli.subcommand == "constants") return cmd_constants(cli);
  if (cli.subcommand == "tail") return cmd_tail(cli.cfg);
  if (cli.subcommand == "compare") return cmd_compare(cli.cfg);
  if (cli.subcommand == "ztail") return cmd_ztail(cli.cfg);
  if (cli.subcommand == "tauberian") return cmd_tauberian(cli.cfg);
  if (cli.subcommand == "symmetry-check") return cmd_symmetry(cli.cfg);
  if (cli.subcommand == "mountain-check") return cmd_mountain(cli.cfg);
  throw ConfigError("unknown subcommand");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo tail constants of the renewal series R = 1 + sum rho_1...rho_k"};
  app.require_subcommand(1);

  std::string config_path;
  std::string family_kind, bfamily_kind;
  double fa = 0, fb = 0, fp = 0, fm = 0, fsigma = 0, falpha = 0, fbeta = 0;
  double bvalue = 1.0, brate = 1.0, blo = 0.0, bhi = 1.0;
  double kappa_override = 0.0;
  std::uint64_t n = 0, n_exc = 0, n_tail = 0, seed = 0;
  double A = 0, eps_bias = 0, eps_cert = 0, rel_tol = 0, ci_level = 0;
  int workers = 0;
  std::string out_dir;
  double t_min = 0, t_max = 0;
  std::uint64_t t_points = 0, lambda_points = 0;
  double lambda_min = 0, lambda_max = 0, h_coeff = 0;
  bool force_lattice = false, dump_paths = false;

  auto* o_config = app.add_option("--config", config_path, "Config file (flat key = value)");
  auto* o_family = app.add_option("--family", family_kind,
                                  "Family kind: two_point | log_normal | beta_ratio");
  app.add_option("--a", fa, "two_point: value a");
  app.add_option("--b", fb, "two_point: value b");
  app.add_option("--p", fp, "two_point: P(rho = a)");
  app.add_option("--m", fm, "log_normal: mean of log rho");
  app.add_option("--sigma", fsigma, "log_normal: sd of log rho");
  app.add_option("--alpha", falpha, "beta_ratio: alpha");
  app.add_option("--beta", fbeta, "beta_ratio: beta");
  auto* o_bfam = app.add_option("--bfamily", bfamily_kind,
                                "B-weight kind: constant | exponential | uniform");
  app.add_option("--b-value", bvalue, "constant B value");
  app.add_option("--b-rate", brate, "exponential B rate");
  app.add_option("--b-lo", blo, "uniform B lower end");
  app.add_option("--b-hi", bhi, "uniform B upper end");
  auto* o_kappa = app.add_option("--kappa", kappa_override, "Override the solved kappa");
  auto* o_n = app.add_option("--n", n, "Replicas for the main estimator");
  auto* o_nexc = app.add_option("--n-excursions", n_exc, "Excursion replicas");
  auto* o_ntail = app.add_option("--n-tail", n_tail, "Direct tail samples");
  auto* o_A = app.add_option("--A", A, "Truncation level for the M-type sums");
  auto* o_ebias = app.add_option("--eps-bias", eps_bias, "Conditioning bias per sampler");
  auto* o_ecert = app.add_option("--eps-cert", eps_cert, "Certificate error probability");
  auto* o_rtol = app.add_option("--rel-tol", rel_tol, "Relative tolerance for R sums");
  auto* o_ci = app.add_option("--ci-level", ci_level, "Confidence level");
  auto* o_seed = app.add_option("--seed", seed, "Master seed");
  auto* o_workers = app.add_option("--workers", workers, "Parallel lanes");
  auto* o_out = app.add_option("--out", out_dir, "Output directory");
  auto* o_tmin = app.add_option("--t-min", t_min, "Tail grid lower threshold");
  auto* o_tmax = app.add_option("--t-max", t_max, "Tail grid upper threshold");
  auto* o_tpoints = app.add_option("--t-points", t_points, "Tail grid size");
  auto* o_lmin = app.add_option("--lambda-min", lambda_min, "Smallest lambda");
  auto* o_lmax = app.add_option("--lambda-max", lambda_max, "Largest lambda");
  auto* o_lpoints = app.add_option("--lambda-points", lambda_points, "Lambda grid size");
  auto* o_hcoeff = app.add_option("--h-coeff", h_coeff, "h(lambda) = h_coeff log(1/lambda)");
  auto* o_lattice =
      app.add_flag("--force-lattice", force_lattice, "Run tail commands on lattice families");
  app.add_flag("--dump-paths", dump_paths, "Dump one replica's branch paths (constants)");
  bool dump_replicas = false;
  app.add_flag("--dump-replicas", dump_replicas,
               "Dump per-replica M functional rows (constants)");

  for (const char* name : {"kappa", "constants", "tail", "compare", "ztail", "tauberian",
                           "symmetry-check", "mountain-check"}) {
    app.add_subcommand(name)->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    Cli cli;
    cli.subcommand = app.get_subcommands().front()->get_name();
    RunConfig& cfg = cli.cfg;
    if (o_config->count()) apply_config_file(cfg, config_path);
    apply_env_overrides(cfg);

    if (o_family->count()) {
      cfg.family = make_family(family_kind, fa, fb, fp, fm, fsigma, falpha, fbeta);
    }
    if (o_bfam->count()) cfg.bfamily = make_bfamily(bfamily_kind, bvalue, brate, blo, bhi);
    if (o_kappa->count()) cfg.kappa_override = kappa_override;
    if (o_n->count()) cfg.n = n;
    if (o_nexc->count()) cfg.n_excursions = n_exc;
    if (o_ntail->count()) cfg.n_tail = n_tail;
    if (o_A->count()) cfg.A = A;
    if (o_ebias->count()) cfg.eps_bias = eps_bias;
    if (o_ecert->count()) cfg.eps_cert = eps_cert;
    if (o_rtol->count()) cfg.rel_tol = rel_tol;
    if (o_ci->count()) cfg.ci_level = ci_level;
    if (o_seed->count()) cfg.seed = seed;
    if (o_workers->count()) cfg.workers = workers;
    if (o_out->count()) cfg.out_dir = out_dir;
    if (o_tmin->count()) cfg.t_min = t_min;
    if (o_tmax->count()) cfg.t_max = t_max;
    if (o_tpoints->count()) cfg.t_points = t_points;
    if (o_lmin->count()) cfg.lambda_min = lambda_min;
    if (o_lmax->count()) cfg.lambda_max = lambda_max;
    if (o_lpoints->count()) cfg.lambda_points = lambda_points;
    if (o_hcoeff->count()) cfg.h_coeff = h_coeff;
    if (o_lattice->count()) cfg.force_lattice = force_lattice;
    cli.dump_paths = dump_paths;
    cli.dump_replicas = dump_replicas;

    validate(cfg);
    return dispatch(cli);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const CapExceededError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitCap;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
