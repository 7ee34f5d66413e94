#include "perpetuity/runner.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "perpetuity/errors.hpp"

namespace perpetuity {

std::uint64_t stream_id(std::uint64_t phase, std::uint64_t index) {
  if (index >= (1ULL << 40)) throw std::invalid_argument("stream_id: replica index too large");
  return (phase << 40) | index;
}

namespace {

// Replicas [begin, end) on streams (phase, begin), ..., (phase, end - 1).
// Workers grab fixed-size chunks; since every replica owns its stream and
// writes only its own slot, the schedule cannot affect results.
void for_each_replica_range(std::uint64_t begin, std::uint64_t end, const ParallelSpec& par,
                            std::uint64_t phase,
                            const std::function<void(std::size_t, RngStream&)>& fn) {
  const int workers = std::max(1, par.workers);
  if (workers == 1 || end - begin < 2) {
    for (std::uint64_t i = begin; i < end; ++i) {
      RngStream rng(par.master_seed, stream_id(phase, i));
      fn(static_cast<std::size_t>(i - begin), rng);
    }
    return;
  }
  std::atomic<std::uint64_t> next{begin};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  constexpr std::uint64_t chunk = 64;
  auto work = [&] {
    try {
      for (;;) {
        const std::uint64_t lo = next.fetch_add(chunk);
        if (lo >= end) return;
        const std::uint64_t hi = std::min(end, lo + chunk);
        for (std::uint64_t i = lo; i < hi; ++i) {
          RngStream rng(par.master_seed, stream_id(phase, i));
          fn(static_cast<std::size_t>(i - begin), rng);
        }
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

void for_each_replica(std::size_t n, const ParallelSpec& par, std::uint64_t phase,
                      const std::function<void(std::size_t, RngStream&)>& fn) {
  for_each_replica_range(0, n, par, phase, fn);
}

std::vector<ExcursionRecord> run_excursions(const RhoFamily& family, std::size_t n,
                                            const ParallelSpec& par, std::uint64_t phase,
                                            long cap) {
  std::vector<ExcursionRecord> out(n);
  for_each_replica(n, par, phase, [&](std::size_t i, RngStream& rng) {
    out[i] = first_excursion(family, rng, cap);
  });
  return out;
}

std::vector<FunctionalSample> run_m_replicas(const RhoFamily& family, double kappa,
                                             std::size_t n, double A, double eps_bias,
                                             const TruncationCalibration& calib,
                                             const ParallelSpec& par, std::uint64_t phase,
                                             const std::optional<BFamily>& bfam, long cap) {
  std::vector<FunctionalSample> out(n);
  for_each_replica(n, par, phase, [&](std::size_t i, RngStream& rng) {
    const WalkPath left =
        sample_stay_nonneg_left(family, kappa, A, rng, eps_bias, kDefaultRejectionBudget, cap);
    const WalkPath right = sample_stay_positive_tilted(family, kappa, A, rng, eps_bias,
                                                       kDefaultRejectionBudget, cap);
    out[i] = bfam ? compute_MB(left, right, A, *bfam, rng, calib)
                  : compute_M(left, right, A, calib);
  });
  return out;
}

std::vector<double> run_r_samples(const RhoFamily& family, std::size_t n,
                                  const RStoppingRule& rule, const ParallelSpec& par,
                                  std::uint64_t phase, const std::optional<BFamily>& bfam,
                                  long cap) {
  std::vector<double> out(n);
  for_each_replica(n, par, phase, [&](std::size_t i, RngStream& rng) {
    out[i] = bfam ? compute_RB(family, *bfam, rng, rule, cap).value
                  : compute_R(family, rng, rule, cap).value;
  });
  return out;
}

double ConditionedRun::p_h_equals_s() const {
  return attempts_used == 0
             ? 0.0
             : static_cast<double>(accepted.size()) / static_cast<double>(attempts_used);
}

ConditionedRun run_conditioned(const RhoFamily& family, double kappa, std::size_t n_accept,
                               double A, double eps_cert, double eps_bias,
                               const TruncationCalibration& calib, const ParallelSpec& par,
                               std::uint64_t phase, std::vector<double> h_levels,
                               double z_min_h, double cert_safety, long cap) {
  if (n_accept == 0) throw std::invalid_argument("run_conditioned: n_accept = 0");

  struct AttemptOut {
    bool accepted = false;
    ConditionedRecord rec;
  };

  ConditionedRun out;
  out.h_levels = std::move(h_levels);
  out.h_level_counts.assign(out.h_levels.size(), 0);
  out.z_min_h = z_min_h;
  out.accepted.reserve(n_accept);

  const std::uint64_t block =
      std::min<std::uint64_t>(std::max<std::uint64_t>(4096, n_accept), 1ULL << 19);
  const std::uint64_t attempt_budget =
      10000ULL * static_cast<std::uint64_t>(n_accept) + 1000000ULL;
  std::uint64_t base = 0;
  std::vector<AttemptOut> buf;
  while (out.accepted.size() < n_accept) {
    if (base > attempt_budget) {
      throw RejectionBudgetError("run_conditioned: H = S acceptance rate collapsed");
    }
    buf.assign(block, AttemptOut{});
    for_each_replica_range(base, base + block, par, phase, [&](std::size_t i, RngStream& rng) {
      ConditionedISample smp = sample_conditioned_I(family, kappa, rng, eps_cert, eps_bias, A,
                                                    cert_safety, /*want_left=*/false, cap);
      AttemptOut& o = buf[i];
      o.accepted = smp.h_equals_s;
      o.rec.h = smp.h;
      if (!smp.h_equals_s) return;
      o.rec.ki = smp.ki;
      o.rec.v_post1 = smp.right.values[static_cast<std::size_t>(smp.t_h + 1)] - smp.h;
      if (smp.t_h >= 1) {
        o.rec.has_ascent = true;
        o.rec.v1_fwd = smp.right.values[1];
        o.rec.v1_rev = smp.h - smp.right.values[static_cast<std::size_t>(smp.t_h - 1)];
      }
      if (smp.h >= z_min_h) {
        smp.left = sample_stay_nonneg_left(family, kappa, A, rng, eps_bias,
                                           kDefaultRejectionBudget, cap);
        const ZParts z = compute_Z(smp, A, calib);
        o.rec.m1bar = z.m1.value;
        o.rec.m2bar = z.m2.value;
        o.rec.zbar = z.z.value;
        o.rec.has_z = true;
      }
    });
    // Fold in attempt order, stopping exactly at the n-th acceptance so the
    // tallies cover a well-defined attempt prefix.
    for (const AttemptOut& o : buf) {
      ++out.attempts_used;
      for (std::size_t j = 0; j < out.h_levels.size(); ++j) {
        if (o.rec.h >= out.h_levels[j]) ++out.h_level_counts[j];
      }
      if (o.accepted) {
        out.accepted.push_back(o.rec);
        if (out.accepted.size() == n_accept) break;
      }
    }
    base += block;
  }
  return out;
}

MountainRun run_mountain(const RhoFamily& family, double kappa, std::size_t n,
                         double eps_bias, const LadderCalibration& calib,
                         const ParallelSpec& par, std::uint64_t phase, long cap) {
  MountainRun out;
  out.s_values.assign(n, 0.0);
  out.weights.assign(n, 0.0);
  for_each_replica(n, par, phase, [&](std::size_t i, RngStream& rng) {
    const MountainSample smp = sample_mountain(family, kappa, rng, eps_bias, calib, cap);
    out.s_values[i] = smp.s;
    out.weights[i] = smp.importance_weight;
  });
  return out;
}

std::vector<double> run_direct_s(const RhoFamily& family, double kappa, std::size_t n,
                                 double eps_cert, const ParallelSpec& par,
                                 std::uint64_t phase, long cap) {
  std::vector<double> out(n);
  for_each_replica(n, par, phase, [&](std::size_t i, RngStream& rng) {
    out[i] = sample_direct_s(family, kappa, rng, eps_cert, cap);
  });
  return out;
}

ConstantsBundle run_constants_pipeline(const RhoFamily& family, const ConstantsOptions& opt,
                                       const ParallelSpec& par) {
  ConstantsBundle bundle;
  bundle.kappa = solve_kappa(family);
  const double kappa = bundle.kappa.kappa;

  RngStream cal_rng(par.master_seed, stream_id(stream_phase::trunc_calib, 0));
  bundle.trunc_calib = calibrate_truncation(family, kappa, 2000, cal_rng, opt.cap);

  const auto excursions =
      run_excursions(family, opt.n_excursions, par, opt.excursion_phase, opt.cap);
  bundle.exc = estimate_feller_iglehart(excursions, family, kappa, opt.ci_level);

  const auto m_samples = run_m_replicas(family, kappa, opt.n_m, opt.A, opt.eps_bias,
                                        bundle.trunc_calib, par, opt.m_phase, std::nullopt,
                                        opt.cap);
  bundle.em_kappa = estimate_em_kappa(m_samples, kappa, opt.ci_level);

  if (opt.bfam) {
    const auto mb_samples = run_m_replicas(family, kappa, opt.n_m, opt.A, opt.eps_bias,
                                           bundle.trunc_calib, par, opt.mb_phase, opt.bfam,
                                           opt.cap);
    bundle.emb_kappa = estimate_em_kappa(mb_samples, kappa, opt.ci_level);
  }
  bundle.constants =
      assemble_constants(bundle.exc, bundle.em_kappa, bundle.emb_kappa, opt.ci_level);
  return bundle;
}

std::vector<TauberianRow> tauberian_rows(const ConditionedRun& run, double kappa, double c_u,
                                         std::span<const double> lambdas, double h_coeff,
                                         double ci_level) {
  if (run.h_levels.size() != lambdas.size()) {
    throw std::invalid_argument("tauberian_rows: run was tallied for a different grid");
  }
  const double prefactor = tauberian_prefactor(kappa);
  std::vector<TauberianRow> rows;
  rows.reserve(lambdas.size());
  for (std::size_t j = 0; j < lambdas.size(); ++j) {
    const double lambda = lambdas[j];
    TauberianRow row;
    row.lambda = lambda;
    row.h = tauberian_h(lambda, h_coeff);
    if (std::abs(row.h - run.h_levels[j]) > 1e-9) {
      throw std::invalid_argument("tauberian_rows: h grid mismatch");
    }
    std::vector<double> vals;
    for (const auto& rec : run.accepted) {
      if (rec.h >= row.h && rec.has_z) {
        vals.push_back(1.0 - 1.0 / (1.0 + lambda * rec.zbar));
      }
    }
    row.n_kept = vals.size();
    row.p_h_raw = static_cast<double>(run.h_level_counts[j]) /
                  static_cast<double>(run.attempts_used);
    if (vals.size() >= 2 && row.p_h_raw > 0.0) {
      const EstimateWithCI est = mean_ci(vals, ci_level);
      row.estimate = est.point;
      row.se = est.se;
      row.target = prefactor * c_u * std::pow(lambda, kappa) / row.p_h_raw;
      row.ratio = row.estimate / row.target;
    } else {
      row.estimate = row.se = row.target = row.ratio =
          std::numeric_limits<double>::quiet_NaN();
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace perpetuity
