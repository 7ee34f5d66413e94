#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "perpetuity/constants.hpp"
#include "perpetuity/dist.hpp"
#include "perpetuity/functionals.hpp"
#include "perpetuity/kappa.hpp"
#include "perpetuity/paths.hpp"
#include "perpetuity/stats.hpp"

namespace perpetuity {

// Replica k always runs on stream (master_seed, phase << 40 | k), no matter
// which worker picks it up or in which order; reductions walk the replica
// index, so results are byte-identical across worker counts.
namespace stream_phase {
inline constexpr std::uint64_t excursions = 1;
inline constexpr std::uint64_t m_replicas = 2;
inline constexpr std::uint64_t r_samples = 3;
inline constexpr std::uint64_t conditioned = 4;
inline constexpr std::uint64_t mountain = 5;
inline constexpr std::uint64_t direct_s = 6;
inline constexpr std::uint64_t ladder_calib = 7;
inline constexpr std::uint64_t trunc_calib = 8;
inline constexpr std::uint64_t excursions_aux = 9;
inline constexpr std::uint64_t m_replicas_aux = 10;
inline constexpr std::uint64_t mb_replicas = 11;
inline constexpr std::uint64_t rb_samples = 12;
inline constexpr std::uint64_t test_base = 1000;
}  // namespace stream_phase

std::uint64_t stream_id(std::uint64_t phase, std::uint64_t index);

struct ParallelSpec {
  std::uint64_t master_seed = 0;
  int workers = 1;
};

// fn(replica_index, stream) must write only to its own slot.
void for_each_replica(std::size_t n, const ParallelSpec& par, std::uint64_t phase,
                      const std::function<void(std::size_t, RngStream&)>& fn);

std::vector<ExcursionRecord> run_excursions(const RhoFamily& family, std::size_t n,
                                            const ParallelSpec& par,
                                            std::uint64_t phase = stream_phase::excursions,
                                            long cap = kDefaultStepCap);

// n independent replicas of M (or M^B when bfam is set): both conditioned
// branches to level A, then the truncated two-sided sum.
std::vector<FunctionalSample> run_m_replicas(const RhoFamily& family, double kappa,
                                             std::size_t n, double A, double eps_bias,
                                             const TruncationCalibration& calib,
                                             const ParallelSpec& par,
                                             std::uint64_t phase = stream_phase::m_replicas,
                                             const std::optional<BFamily>& bfam = std::nullopt,
                                             long cap = kDefaultStepCap);

std::vector<double> run_r_samples(const RhoFamily& family, std::size_t n,
                                  const RStoppingRule& rule, const ParallelSpec& par,
                                  std::uint64_t phase = stream_phase::r_samples,
                                  const std::optional<BFamily>& bfam = std::nullopt,
                                  long cap = kDefaultStepCap);

// Per accepted conditioned-I replica: the truncated functionals plus the
// first forward and first reversed ascent steps (NaN when T_H = 0).
struct ConditionedRecord {
  double h = 0.0;
  double m1bar = 0.0;
  double m2bar = 0.0;
  double zbar = 0.0;
  double ki = 0.0;
  double v1_fwd = 0.0;   // V_1
  double v1_rev = 0.0;   // V_{T_H} - V_{T_H - 1}
  double v_post1 = 0.0;  // V_{T_H + 1} - H, first step of the descent part
  bool has_ascent = false;
  bool has_z = false;
};

struct ConditionedRun {
  std::vector<ConditionedRecord> accepted;  // first n accepted, attempt order
  std::uint64_t attempts_used = 0;          // attempts through the n-th acceptance
  std::vector<double> h_levels;             // echoed from the request
  std::vector<std::uint64_t> h_level_counts;  // raw excursions with H >= level
  double p_h_equals_s() const;
  double z_min_h = 0.0;
};

// Draws attempts in a fixed deterministic order until n_accept acceptances.
// Raw excursion maxima are tallied against h_levels over exactly the
// attempts consumed. Z functionals are only evaluated for accepted replicas
// with H >= z_min_h (the others keep has_z = false), which lets the
// Tauberian run skip the left branch for replicas it will never use.
ConditionedRun run_conditioned(const RhoFamily& family, double kappa, std::size_t n_accept,
                               double A, double eps_cert, double eps_bias,
                               const TruncationCalibration& calib, const ParallelSpec& par,
                               std::uint64_t phase = stream_phase::conditioned,
                               std::vector<double> h_levels = {}, double z_min_h = 0.0,
                               double cert_safety = 1.0, long cap = kDefaultStepCap);

struct MountainRun {
  std::vector<double> s_values;  // Y_Theta per replica
  std::vector<double> weights;   // importance weights
};
MountainRun run_mountain(const RhoFamily& family, double kappa, std::size_t n,
                         double eps_bias, const LadderCalibration& calib,
                         const ParallelSpec& par,
                         std::uint64_t phase = stream_phase::mountain,
                         long cap = kDefaultStepCap);

std::vector<double> run_direct_s(const RhoFamily& family, double kappa, std::size_t n,
                                 double eps_cert, const ParallelSpec& par,
                                 std::uint64_t phase = stream_phase::direct_s,
                                 long cap = kDefaultStepCap);

// Excursions + M replicas + assembly: everything Theorems 1-3 need.
struct ConstantsOptions {
  std::size_t n_m = 10000;
  std::size_t n_excursions = 10000;
  double A = 25.0;
  double eps_bias = 1e-4;
  double eps_cert = 1e-4;
  double ci_level = 0.95;
  std::optional<BFamily> bfam;
  long cap = kDefaultStepCap;
  std::uint64_t excursion_phase = stream_phase::excursions;
  std::uint64_t m_phase = stream_phase::m_replicas;
  std::uint64_t mb_phase = stream_phase::mb_replicas;
};
struct ConstantsBundle {
  KappaResult kappa;
  TruncationCalibration trunc_calib;
  ExcursionEstimates exc;
  EstimateWithCI em_kappa;
  std::optional<EstimateWithCI> emb_kappa;
  ConstantsSet constants;
};
ConstantsBundle run_constants_pipeline(const RhoFamily& family, const ConstantsOptions& opt,
                                       const ParallelSpec& par);

// Per-lambda Tauberian comparison rows over one conditioned run.
struct TauberianRow {
  double lambda = 0.0;
  double h = 0.0;
  std::size_t n_kept = 0;
  double estimate = 0.0;
  double se = 0.0;
  double p_h_raw = 0.0;  // raw-excursion P(H >= h)
  double target = 0.0;   // prefactor * C_U * lambda^kappa / p_h_raw
  double ratio = 0.0;
};
std::vector<TauberianRow> tauberian_rows(const ConditionedRun& run, double kappa, double c_u,
                                         std::span<const double> lambdas, double h_coeff,
                                         double ci_level = 0.95);

}  // namespace perpetuity
