#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "perpetuity/dist.hpp"

namespace perpetuity {

inline constexpr long kDefaultStepCap = 10'000'000;
inline constexpr long kDefaultRejectionBudget = 1'000'000;

// How a path was conditioned. Conditioning on infinite-horizon events is
// realized by rejection plus a stopping certificate; the realized bias is
// carried in WalkPath::eps_bias.
enum class Certificate { none, stay_positive, stay_nonneg, mountain, conditioned_I };

struct WalkPath {
  // values[0] == 0. Right branches store V_k at index k; left branches are
  // read outward from the origin and store V_{-m} at index m.
  std::vector<double> values;
  MeasureTag measure;
  Certificate certificate = Certificate::none;
  double eps_bias = 0.0;
};

// First-excursion statistics under Q.
struct ExcursionRecord {
  long t_neg = 0;   // T_{R-} = inf{k>0 : V_k <= 0}
  double o1 = 0.0;  // overshoot -V(T_{R-})
  double h = 0.0;   // max of the excursion
  long t_h = 0;     // first time the max is attained
  double ki = 0.0;  // sum_{0<=k<=T_neg} e^{V_k}
};

struct LadderDecomposition {
  std::vector<std::size_t> epochs;  // e_0 = 0 < e_1 < ...
  std::vector<double> heights;      // strictly increasing, heights[0] = 0
  double weight = 0.0;              // sum_k e^{-kappa * heights[k]} >= 1
};

// One draw from the reweighted ascent law: Y under density proportional to
// (sum_k e^{-kappa Y_{e_k}}) dQtilde, and Theta picked among the ladder
// epochs with probability proportional to e^{-kappa Y_{e_p}}.
struct MountainSample {
  WalkPath ascent;  // Y_0..Y_Theta
  std::size_t theta = 0;
  double s = 0.0;                 // Y_Theta, the realized maximum
  double importance_weight = 0.0;  // sum e^{-kappa Y_{e_k}} over simulated epochs
  double residual_bound = 0.0;     // declared bound on the weight not simulated
};

// One attempt at the law Q(. | I), I = {H = S} and {V_k >= 0 for k <= 0}.
// `h_equals_s` reports whether the H = S certificate held; the left branch is
// only sampled for accepted attempts.
struct ConditionedISample {
  WalkPath left;   // V_{-m} at index m, stay_nonneg certificate
  WalkPath right;  // excursion plus certified continuation under Q
  double h = 0.0;
  long t_h = 0;
  long t_neg = 0;
  double o1 = 0.0;
  double ki = 0.0;
  bool h_equals_s = false;
  double eps_cert = 0.0;
};

// Unconditioned walk of n steps under Q or Qtilde.
WalkPath sample_walk(const RhoFamily& family, MeasureTag measure, std::size_t n, RngStream& rng);

// Simulate under Q until V_k <= 0. Throws CapExceededError past `cap` steps.
ExcursionRecord first_excursion(const RhoFamily& family, RngStream& rng,
                                long cap = kDefaultStepCap);

// Rejection sampler for Qtilde(. | V_k > 0 for all k > 0), stopped once the
// path exceeds max(a_stop, log(1/eps_bias)/kappa). From that height the
// chance of ever returning to 0 is below eps_bias by the Chernoff first
// passage bound: E^{Qtilde}[rho^-kappa] = 1, so P(min of the future walk
// < -x) <= e^{-kappa x}.
// attempts_out, when set, receives the number of proposal paths drawn
// (accepted one included), for acceptance-rate diagnostics.
WalkPath sample_stay_positive_tilted(const RhoFamily& family, double kappa, double a_stop,
                                     RngStream& rng, double eps_bias,
                                     long rejection_budget = kDefaultRejectionBudget,
                                     long cap = kDefaultStepCap, long* attempts_out = nullptr);

// Same scheme for the left branch (V_i)_{i<0} under Q(. | V_i >= 0, i < 0):
// increments are -log rho under Q read outward from 0, and the same
// kappa-rate bound applies since E^Q[rho^kappa] = 1.
WalkPath sample_stay_nonneg_left(const RhoFamily& family, double kappa, double a_stop,
                                 RngStream& rng, double eps_bias,
                                 long rejection_budget = kDefaultRejectionBudget,
                                 long cap = kDefaultStepCap, long* attempts_out = nullptr);

// Strict ascending ladder epochs of a realized path, and the weight
// sum_k e^{-kappa Y_{e_k}} over the epochs found within it.
LadderDecomposition ladder_epochs(const WalkPath& path, double kappa);

// One-off estimate of m = E^{Qtilde}[e^{-kappa Y_{e_1}}] by simulating single
// ladder steps. Drives the mountain sampler's residual-weight stopping rule
// and gives the independent normalizer Z = 1/(1 - m).
struct LadderCalibration {
  double m_hat = 0.0;
  double m_se = 0.0;
  std::size_t n = 0;
  double z_hat() const { return 1.0 / (1.0 - m_hat); }
  double z_se() const { return m_se / ((1.0 - m_hat) * (1.0 - m_hat)); }
};
LadderCalibration calibrate_ladder(const RhoFamily& family, double kappa, std::size_t n,
                                   RngStream& rng, long cap = kDefaultStepCap);

// Self-normalized importance draw from the mountain law Qhat. The walk is
// extended until the expected ladder weight still unsimulated, bounded by
// e^{-kappa Y_last} m/(1-m) from the newest epoch, drops below
// eps_bias * (weight found so far).
MountainSample sample_mountain(const RhoFamily& family, double kappa, RngStream& rng,
                               double eps_bias, const LadderCalibration& calib,
                               long cap = kDefaultStepCap);

// One attempt at Q(. | I). The right branch runs its first excursion, then
// continues until H - V_k >= max(log(cert_safety/eps_cert)/kappa,
// continuation_depth); if the continuation ever exceeds H the attempt is
// rejected (H != S). continuation_depth >= A guarantees the truncation
// windows of the Z functionals are contained in the simulated data.
ConditionedISample sample_conditioned_I(const RhoFamily& family, double kappa, RngStream& rng,
                                        double eps_cert, double eps_bias,
                                        double continuation_depth, double cert_safety = 1.0,
                                        bool want_left = true, long cap = kDefaultStepCap);

// The absolute maximum S of a Q-walk, certified once the walk has dropped
// log(1/eps_cert)/kappa below its running maximum.
double sample_direct_s(const RhoFamily& family, double kappa, RngStream& rng, double eps_cert,
                       long cap = kDefaultStepCap);

}  // namespace perpetuity
