// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failures. argv[1] must point at the CLI binary (used by the determinism
// criterion).

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "perpetuity/constants.hpp"
#include "perpetuity/functionals.hpp"
#include "perpetuity/kappa.hpp"
#include "perpetuity/runner.hpp"
#include "perpetuity/stats.hpp"

using namespace perpetuity;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::printf("%s criterion %2d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

constexpr int kWorkers = 2;
constexpr double kZ95 = 1.959963984540054;

RhoFamily beta23() { return RhoFamily::beta_ratio(2.0, 3.0); }
RhoFamily ln_half() { return RhoFamily::log_normal(-0.5, 1.0); }

// Within `rel` relative error, or overlapping 95% intervals, whichever is
// looser. The direct fit's interval combines its binomial noise with the
// plateau drift.
bool routes_agree(double assembled, double se_a, const TailFit& fit, double rel) {
  if (!fit.has_plateau) return false;
  const double direct = fit.fitted_constant;
  const double rel_gap = std::abs(assembled - direct) / std::max(assembled, direct);
  if (rel_gap <= rel) return true;
  const double half_d = kZ95 * fit.fit_se() + fit.max_drift * direct;
  return std::max(assembled - kZ95 * se_a, direct - half_d) <=
         std::min(assembled + kZ95 * se_a, direct + half_d);
}

// --- criterion 1 -----------------------------------------------------------

void criterion_1() {
  const auto t0 = std::chrono::steady_clock::now();
  const double k1 = solve_kappa(beta23()).kappa;
  const double k2 = solve_kappa(ln_half()).kappa;
  const double k3 = solve_kappa(RhoFamily::two_point(2.0, 0.5, 1.0 / 3.0)).kappa;
  const double elapsed = seconds_since(t0);
  const double worst =
      std::max({std::abs(k1 - 1.0), std::abs(k2 - 1.0), std::abs(k3 - 1.0)});
  report(1, worst <= 1e-6 && elapsed < 1.0,
         fmt("kappa solver: beta_ratio %.9f, log_normal %.9f, two_point %.9f "
             "(worst |k-1| = %.2e, %.3f s)",
             k1, k2, k3, worst, elapsed));
}

// --- criterion 2 -----------------------------------------------------------

struct Theorem1Result {
  ConstantsBundle bundle;
  TailFit fit;
  bool pass = false;
  double rel = 0.0;
};

Theorem1Result theorem1_check(const RhoFamily& fam, std::uint64_t seed) {
  Theorem1Result out;
  ConstantsOptions opt;
  opt.n_m = 200000;
  opt.n_excursions = 100000;
  const ParallelSpec par{seed, kWorkers};
  out.bundle = run_constants_pipeline(fam, opt, par);
  const double kappa = out.bundle.kappa.kappa;
  const auto rule = make_r_stopping_rule(fam, kappa, 1e-6, 1e-4);
  out.fit = direct_tail_fit(run_r_samples(fam, 1000000, rule, par), kappa, TailGridSpec{});
  const auto& ck = out.bundle.constants.c_k;
  out.rel = std::abs(ck.value - out.fit.fitted_constant) /
            std::max(ck.value, out.fit.fitted_constant);
  out.pass = routes_agree(ck.value, ck.se, out.fit, 0.10);
  return out;
}

void criterion_2() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto br = theorem1_check(beta23(), 1002);
  const auto ln = theorem1_check(ln_half(), 1003);
  const double elapsed = seconds_since(t0);
  report(2, br.pass && ln.pass && elapsed < 600.0,
         fmt("Theorem 1: beta_ratio C_K %.4f vs tail %.4f (rel %.3f); log_normal C_K %.4f "
             "vs tail %.4f (rel %.3f); %.1f s",
             br.bundle.constants.c_k.value, br.fit.fitted_constant, br.rel,
             ln.bundle.constants.c_k.value, ln.fit.fitted_constant, ln.rel, elapsed));
}

// --- criterion 3 -----------------------------------------------------------

void criterion_3() {
  const auto t0 = std::chrono::steady_clock::now();
  bool all = true;
  std::string detail = "Iglehart:";
  for (const auto& fam : {beta23(), ln_half()}) {
    const double kappa = solve_kappa(fam).kappa;
    const ParallelSpec par{1010, kWorkers};
    const auto excursions = run_excursions(fam, 1000000, par);
    const auto est = estimate_feller_iglehart(excursions, fam, kappa);
    std::vector<double> eh;
    eh.reserve(excursions.size());
    for (const auto& ex : excursions) eh.push_back(std::exp(ex.h));
    const auto fit = direct_tail_fit(std::move(eh), kappa, TailGridSpec{});
    const double rel = fit.has_plateau ? std::abs(fit.fitted_constant - est.c_i.point) /
                                             est.c_i.point
                                       : 1.0;
    all = all && fit.has_plateau && rel <= 0.05;
    detail += fmt(" %s C_I %.4f vs e^H tail %.4f (rel %.3f);", fam.describe().c_str(),
                  est.c_i.point, fit.fitted_constant, rel);
  }
  const double elapsed = seconds_since(t0);
  detail += fmt(" %.1f s", elapsed);
  report(3, all && elapsed < 120.0, detail);
}

// --- criterion 4 -----------------------------------------------------------

void criterion_4() {
  const auto fam = beta23();
  const double kappa = 1.0;
  ConstantsOptions opt;
  opt.n_m = 200000;
  opt.n_excursions = 100000;
  const ParallelSpec par{1020, kWorkers};
  const auto bundle = run_constants_pipeline(fam, opt, par);
  const auto run =
      run_conditioned(fam, kappa, 100000, 25.0, 1e-4, 1e-4, bundle.trunc_calib, par);
  std::vector<double> zbars;
  zbars.reserve(run.accepted.size());
  for (const auto& rec : run.accepted) zbars.push_back(rec.zbar);
  const auto fit = direct_tail_fit(std::move(zbars), kappa, TailGridSpec{});
  const double target = bundle.constants.c_u.value / run.p_h_equals_s();
  const double rel = fit.has_plateau
                         ? std::abs(fit.fitted_constant - target) /
                               std::max(fit.fitted_constant, target)
                         : 1.0;
  report(4, fit.has_plateau && rel <= 0.15,
         fmt("Theorem 2: Z tail %.4f vs C_U/P(H=S) = %.4f/%.4f = %.4f (rel %.3f)",
             fit.fitted_constant, bundle.constants.c_u.value, run.p_h_equals_s(), target,
             rel));
}

// --- criterion 5 -----------------------------------------------------------

void criterion_5() {
  const auto fam = beta23();
  const auto bfam = BFamily::exponential(1.0);
  ConstantsOptions opt;
  opt.n_m = 200000;
  opt.n_excursions = 100000;
  opt.bfam = bfam;
  const ParallelSpec par{1030, kWorkers};
  const auto bundle = run_constants_pipeline(fam, opt, par);
  const double kappa = bundle.kappa.kappa;
  const auto rule = make_r_stopping_rule(fam, kappa, 1e-6, 1e-4, bfam);
  const auto fit = direct_tail_fit(
      run_r_samples(fam, 1000000, rule, par, stream_phase::rb_samples, bfam), kappa,
      TailGridSpec{});
  const auto& ckb = *bundle.constants.c_kb;
  const double rel = fit.has_plateau ? std::abs(ckb.value - fit.fitted_constant) /
                                           std::max(ckb.value, fit.fitted_constant)
                                     : 1.0;
  report(5, fit.has_plateau && rel <= 0.15,
         fmt("Theorem 3 (B ~ Exp(1)): C_KB %.4f vs R^B tail %.4f (rel %.3f)", ckb.value,
             fit.fitted_constant, rel));
}

// --- criterion 6 -----------------------------------------------------------

void criterion_6() {
  const auto fam = beta23();
  const double kappa = 1.0;
  RngStream cal(1040, stream_id(stream_phase::trunc_calib, 0));
  const auto calib = calibrate_truncation(fam, kappa, 2000, cal);

  // Route 1: C_KI = C_I E[M^kappa]; route 2: C_KI = (1 - E e^{-kappa O_1}) C_K
  // with every component estimated on its own seed.
  const ParallelSpec par1{1041, kWorkers};
  const auto exc1 = estimate_feller_iglehart(run_excursions(fam, 200000, par1), fam, kappa);
  const auto em1 = estimate_em_kappa(
      run_m_replicas(fam, kappa, 100000, 25.0, 1e-4, calib, par1), kappa);
  const double route1 = exc1.c_i.point * em1.point;
  const double se1 = std::hypot(exc1.c_i.point * em1.se, em1.point * exc1.c_i.se);

  const ParallelSpec par2{1042, kWorkers};
  const ParallelSpec par3{1043, kWorkers};
  const auto exc2 = estimate_feller_iglehart(run_excursions(fam, 200000, par2), fam, kappa);
  const auto exc3 = estimate_feller_iglehart(run_excursions(fam, 200000, par3), fam, kappa);
  const auto em2 = estimate_em_kappa(
      run_m_replicas(fam, kappa, 100000, 25.0, 1e-4, calib, par2), kappa);
  const double c_k = exc3.c_f.point * em2.point;
  const double se_ck = std::hypot(exc3.c_f.point * em2.se, em2.point * exc3.c_f.se);
  const double one_minus = 1.0 - exc2.exp_kv.point;
  const double route2 = one_minus * c_k;
  const double se2 = std::hypot(one_minus * se_ck, c_k * exc2.exp_kv.se);

  const double gap = std::abs(route1 - route2);
  const double combined = kZ95 * std::hypot(se1, se2);
  report(6, gap <= combined,
         fmt("C_KI routes: C_I E[M^k] = %.5f vs (1 - E e^{-kO1}) C_K = %.5f "
             "(gap %.5f, 95%% band %.5f)",
             route1, route2, gap, combined));
}

// --- criterion 7 -----------------------------------------------------------

void criterion_7() {
  const auto fam = beta23();
  RngStream cal(1050, stream_id(stream_phase::trunc_calib, 0));
  const auto calib = calibrate_truncation(fam, 1.0, 2000, cal);
  const ParallelSpec par{1050, kWorkers};
  const auto run = run_conditioned(fam, 1.0, 20000, 25.0, 1e-4, 1e-4, calib, par);
  std::vector<double> m1, m2;
  for (std::size_t i = 0; i < run.accepted.size(); ++i) {
    if (i % 2 == 0) {
      m1.push_back(run.accepted[i].m1bar);
    } else {
      m2.push_back(run.accepted[i].m2bar);
    }
  }
  const auto ks = ks_two_sample(m1, m2);
  report(7, ks.p_value > 0.01,
         fmt("time reversal: KS(M1, M2) D = %.4f, p = %.4f at n = %zu per side",
             ks.statistic, ks.p_value, m1.size()));
}

// --- criterion 8 -----------------------------------------------------------

void criterion_8() {
  const auto fam = beta23();
  const double kappa = 1.0;
  RngStream cal(1060, stream_id(stream_phase::ladder_calib, 0));
  const auto calib = calibrate_ladder(fam, kappa, 20000, cal);
  const ParallelSpec par{1060, kWorkers};
  const auto mrun = run_mountain(fam, kappa, 10000, 1e-4, calib, par);
  const auto direct = run_direct_s(fam, kappa, 10000, 1e-5, par);
  const std::vector<double> ones(direct.size(), 1.0);
  const auto ks = ks_two_sample_weighted(mrun.s_values, mrun.weights, direct, ones);

  const auto mean_w = mean_ci(mrun.weights);
  const double gap = std::abs(mean_w.point - calib.z_hat());
  const double band = kZ95 * std::hypot(mean_w.se, calib.z_se());
  const bool weight_ok = gap <= band;
  report(8, ks.p_value > 0.01 && weight_ok,
         fmt("mountain law: weighted KS p = %.4f; mean weight %.4f vs 1/(1 - m) %.4f "
             "(gap %.4f, band %.4f)",
             ks.p_value, mean_w.point, calib.z_hat(), gap, band));
}

// --- criterion 9 -----------------------------------------------------------

void criterion_9() {
  const auto fam = RhoFamily::log_normal(-0.25, 1.0);
  const double kappa = solve_kappa(fam).kappa;  // 1/2
  ConstantsOptions opt;
  opt.n_m = 100000;
  opt.n_excursions = 100000;
  const ParallelSpec par{1070, kWorkers};
  const auto bundle = run_constants_pipeline(fam, opt, par);

  // h(lambda) = 0.5 log(1/lambda): admissible (lambda e^h -> 0, h -> inf),
  // and its finite-lambda corrections decay like lambda^{1/4}, reaching the
  // asymptotic regime on a feasible grid.
  const double h_coeff = 0.5;
  const std::vector<double> lambdas{1e-3, 1e-4, 1e-5, 1e-6, 1e-7};
  std::vector<double> h_levels;
  for (double l : lambdas) h_levels.push_back(tauberian_h(l, h_coeff));
  // Z functionals are needed for every replica that can pass any filter,
  // i.e. H >= the smallest h on the grid (h is decreasing in lambda).
  const double z_min_h = h_levels.front();
  const auto run = run_conditioned(fam, kappa, 1000000, 25.0, 1e-4, 1e-4,
                                   bundle.trunc_calib, par, stream_phase::conditioned,
                                   h_levels, z_min_h);
  const auto rows =
      tauberian_rows(run, kappa, bundle.constants.c_u.value, lambdas, h_coeff);
  std::string detail = "Tauberian ratios:";
  for (const auto& row : rows) detail += fmt(" %.3f", row.ratio);
  const double last = rows.back().ratio;
  detail += fmt(" (smallest lambda %.0e: |ratio - 1| = %.3f)", lambdas.back(),
                std::abs(last - 1.0));
  report(9, std::isfinite(last) && std::abs(last - 1.0) <= 0.15, detail);
}

// --- criterion 10 ----------------------------------------------------------

std::optional<std::string> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void criterion_10(const std::string& cli) {
  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() / "perpetuity_acceptance";
  std::error_code ec;
  fs::remove_all(base, ec);
  fs::create_directories(base);

  const std::string common =
      " constants --family beta_ratio --alpha 2 --beta 3 --n 3000 --n-excursions 3000"
      " --seed 321";
  const std::string run1 = "\"" + cli + "\"" + common + " --workers 1 --out " +
                           (base / "w1").string() + " > /dev/null";
  const std::string run2 = "\"" + cli + "\"" + common + " --workers 3 --out " +
                           (base / "w3").string() + " > /dev/null";
  const std::string run3 = "\"" + cli + "\"" + common + " --workers 1 --out " +
                           (base / "w1b").string() + " > /dev/null";
  const std::string kap1 = "\"" + cli + "\" kappa --family log_normal --m -0.5 --sigma 1"
                           " --seed 5 --out " + (base / "k1").string() + " > /dev/null";
  const std::string kap2 = "\"" + cli + "\" kappa --family log_normal --m -0.5 --sigma 1"
                           " --seed 5 --out " + (base / "k2").string() + " > /dev/null";
  const bool ran = std::system(run1.c_str()) == 0 && std::system(run2.c_str()) == 0 &&
                   std::system(run3.c_str()) == 0 && std::system(kap1.c_str()) == 0 &&
                   std::system(kap2.c_str()) == 0;

  bool identical = false;
  if (ran) {
    const auto a = slurp((base / "w1" / "constants.csv").string());
    const auto b = slurp((base / "w3" / "constants.csv").string());
    const auto c = slurp((base / "w1b" / "constants.csv").string());
    const auto k1 = slurp((base / "k1" / "kappa.csv").string());
    const auto k2 = slurp((base / "k2" / "kappa.csv").string());
    identical =
        a && b && c && k1 && k2 && *a == *b && *a == *c && *k1 == *k2 && !a->empty();
  }
  report(10, ran && identical,
         "determinism: byte-identical constants.csv across reruns and worker counts, "
         "and kappa.csv across reruns");
}

// --- criterion 11 ----------------------------------------------------------

void criterion_11() {
  const auto fam = beta23();
  const double kappa = 1.0;
  const ParallelSpec par{1002, kWorkers};  // paired with criterion 2's seed
  RngStream cal(1002, stream_id(stream_phase::trunc_calib, 0));
  const auto calib = calibrate_truncation(fam, kappa, 2000, cal);
  const auto exc = estimate_feller_iglehart(run_excursions(fam, 100000, par), fam, kappa);
  const auto em20 = estimate_em_kappa(
      run_m_replicas(fam, kappa, 200000, 20.0, 1e-4, calib, par), kappa);
  const auto em30 = estimate_em_kappa(
      run_m_replicas(fam, kappa, 200000, 30.0, 1e-4, calib, par), kappa);
  const double ck20 = exc.c_f.point * em20.point;
  const double ck30 = exc.c_f.point * em30.point;
  const double se20 = std::hypot(exc.c_f.point * em20.se, em20.point * exc.c_f.se);
  const double se30 = std::hypot(exc.c_f.point * em30.se, em30.point * exc.c_f.se);
  const double gap = std::abs(ck20 - ck30);
  const double combined = std::hypot(se20, se30);
  report(11, gap < combined,
         fmt("truncation robustness: C_K(A=20) = %.5f vs C_K(A=30) = %.5f "
             "(gap %.2e < combined stderr %.2e)",
             ck20, ck30, gap, combined));
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: acceptance <path-to-cli>\n");
    return 64;
  }
  const std::string cli = argv[1];
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10(cli);
  criterion_11();
  if (g_failures == 0) {
    std::printf("all acceptance criteria passed\n");
  } else {
    std::printf("%d acceptance criteria FAILED\n", g_failures);
  }
  return g_failures;
}
