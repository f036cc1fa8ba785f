#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dpslr/budget.hpp"
#include "dpslr/dp_median.hpp"
#include "dpslr/rng.hpp"
#include "dpslr/types.hpp"

namespace dpslr {

// Release of NoisyStats. `result` is empty on failure, which happens exactly
// when the privatized nvar(x) is non-positive. The noisy sufficient
// statistics are part of the release at no extra budget.
struct NoisyStatsOutput {
  std::optional<PredictionPair> result;
  double noisy_nvar = 0.0;
  double noisy_ncov = 0.0;
  std::optional<double> alpha_tilde;
  std::optional<double> beta_tilde;

  bool failed() const { return !result.has_value(); }
};

// Perturbs the OLS sufficient statistics with Laplace noise at scale
// 3*(1 - 1/n)/eps, forms the noisy slope when the noisy nvar stays positive,
// then privatizes the intercept with a slope-dependent scale. One ledger
// entry of eps covers predictions and noisy statistics together.
NoisyStatsOutput noisy_stats(const Dataset& d, const Rat& epsilon,
                             RandomSeed seed, BudgetLedger* ledger = nullptr);

// Which DP median runs inside DPTheilSenkMatch.
struct MedianVariant {
  enum class Kind { Exp, Wide, SmoothSens };
  Kind kind = Kind::Exp;
  double theta = 0.01;  // Wide
  int d = 3;            // SmoothSens
  double beta = 0.5;    // SmoothSens

  static MedianVariant exp_mech() { return MedianVariant{}; }
  static MedianVariant wide(double theta) {
    return MedianVariant{Kind::Wide, theta, 3, 0.5};
  }
  static MedianVariant smooth_sens(int d = 3, double beta = 0.5) {
    return MedianVariant{Kind::SmoothSens, 0.0, d, beta};
  }
};

struct MatchingSchedule;  // theilsen.hpp

// DPTheilSenkMatch: pairwise estimates from k sampled matchings, then one DP
// median release per prediction. Half the budget goes to p25 and half to
// p75 (two ledger entries of eps/2). The exponential-mechanism variants run
// at (eps/2)/k per the Lipschitz composition lemma; the smooth-sensitivity
// variant keeps eps/2 and accounts for k inside the sensitivity bound.
// `schedule` may supply a precomputed decomposition of K_n (it only depends
// on n, so Monte Carlo loops reuse one); null builds it on the fly.
PredictionPair dp_theilsen(const Dataset& d, const Rat& epsilon, std::size_t k,
                           const MedianVariant& variant, double r_l, double r_u,
                           RandomSeed seed, BudgetLedger* ledger = nullptr,
                           const MatchingSchedule* schedule = nullptr);

struct GradDescentParams {
  std::size_t iterations = 80;  // T, even and >= 2
  double tau = 1.0;             // per-coordinate gradient clip bound
  PredictionPair init{0.5, 0.5};
  // Step size 1/sqrt(sum of squared noisy updates), accumulated per
  // coordinate; false switches to scalar-norm accumulation for comparison.
  bool per_coordinate_step = true;
};

// DP gradient descent on the squared loss in the (p25, p75) parameterization.
// Pure: per-round Laplace noise at 4*tau/(eps/T). Approx: converts (eps,
// delta) to a zCDP budget and runs the Gaussian path. ZCDP: per-round
// Gaussian noise at sigma = 2*tau/sqrt(rho/T). Returns the average of the
// last T/2 iterates.
PredictionPair dp_grad_descent(const Dataset& d, const PrivacyBudget& budget,
                               const GradDescentParams& params, RandomSeed seed,
                               BudgetLedger* ledger = nullptr);

// Per-point clipped update direction used by one gradient step; exposed so
// tests can compare it against finite differences of the per-point loss.
std::pair<double, double> gd_point_update(const DataPoint& point,
                                          const PredictionPair& iterate,
                                          double tau);

// Forward zCDP -> (eps, delta) conversion and its bisection inverse:
//   eps = rho + sqrt(4 * rho * log(sqrt(pi * rho) / delta)).
double zcdp_epsilon(double rho, double delta);
double zcdp_rho_for_epsilon(double epsilon, double delta);

// Adds Laplace noise at scale 1/(eps*n) to the mean response and returns it
// as both predictions. Good baseline when the slope is near zero.
PredictionPair noisy_intercept(const Dataset& d, const Rat& epsilon,
                               RandomSeed seed, BudgetLedger* ledger = nullptr);

struct TractFamily {
  std::string state_id;
  std::vector<std::pair<std::string, Dataset>> tracts;
};

struct MosRelease {
  // One entry per tract, in family order; empty optional means Suppressed.
  std::vector<std::pair<std::string, std::optional<PredictionPair>>> tracts;
  double mos25 = 0.0;  // max observed sensitivity across eligible tracts
  double mos75 = 0.0;
};

// The Opportunity Insights "Maximum Observed Sensitivity" heuristic; NOT
// differentially private. Tracts need >= 20 points with at least 10% of x
// values above the state median and 10% below; eligible tracts get OLS
// predictions plus Laplace noise at scale MOS / n_tract per statistic, where
// MOS is the 11x11-grid sensitivity envelope across eligible tracts. The
// quoted epsilon labels the release in the ledger (tagged as heuristic) but
// does not rescale the noise.
MosRelease mos_release(const TractFamily& family, const Rat& epsilon,
                       RandomSeed seed, BudgetLedger* ledger = nullptr);

}  // namespace dpslr
