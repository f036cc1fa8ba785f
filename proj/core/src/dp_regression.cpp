#include "dpslr/dp_regression.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dpslr/errors.hpp"
#include "dpslr/ols.hpp"
#include "dpslr/theilsen.hpp"

namespace dpslr {

NoisyStatsOutput noisy_stats(const Dataset& d, const Rat& epsilon,
                             RandomSeed seed, BudgetLedger* ledger) {
  double eps = epsilon.to_double();
  if (!(eps > 0)) throw InvalidValue("noisy_stats: epsilon must be > 0");
  const auto stats = sufficient_stats(d);
  const double n = static_cast<double>(stats.n);
  const double delta12 = 1.0 - 1.0 / n;

  RngStream rng(seed);
  NoisyStatsOutput out;
  double l1 = rng.laplace(0.0, 3.0 * delta12 / eps);
  double l2 = rng.laplace(0.0, 3.0 * delta12 / eps);
  out.noisy_ncov = stats.ncov + l1;
  out.noisy_nvar = stats.nvar + l2;
  if (out.noisy_nvar > 0) {
    double alpha = out.noisy_ncov / out.noisy_nvar;
    double delta3 = (1.0 + std::fabs(alpha)) / n;
    double l3 = rng.laplace(0.0, 3.0 * delta3 / eps);
    double beta = (stats.ybar - alpha * stats.xbar) + l3;
    out.alpha_tilde = alpha;
    out.beta_tilde = beta;
    out.result = PredictionPair{0.25 * alpha + beta, 0.75 * alpha + beta};
  }
  if (ledger) {
    *ledger = spend(*ledger, "noisy-stats", PrivacyBudget::pure(epsilon));
  }
  return out;
}

PredictionPair dp_theilsen(const Dataset& d, const Rat& epsilon, std::size_t k,
                           const MedianVariant& variant, double r_l, double r_u,
                           RandomSeed seed, BudgetLedger* ledger,
                           const MatchingSchedule* schedule) {
  if (d.size() < 4) throw TooFewPoints("dp_theilsen needs n >= 4");
  if (!(r_l < r_u)) throw InvalidRange("dp_theilsen: r_l must be < r_u");
  const Rat half = epsilon / Rat(2);
  const double eps_half = half.to_double();
  if (!(eps_half > 0)) throw InvalidValue("dp_theilsen: epsilon must be > 0");

  MatchingSchedule local;
  if (schedule == nullptr || schedule->n != d.size()) {
    local = matching_schedule(d.size());
    schedule = &local;
  }
  auto estimates =
      pairwise_estimates(d, *schedule, k, derive_stream(seed, "pairs"));
  if (estimates.z25.empty()) {
    throw NoValidPairs("dp_theilsen: all pairs vertical");
  }

  auto release = [&](const std::vector<double>& z, RandomSeed s) {
    switch (variant.kind) {
      case MedianVariant::Kind::Exp: {
        MedianMechParams p{eps_half / static_cast<double>(k), r_l, r_u, 0.0};
        return exp_mech_median(z, p, s);
      }
      case MedianVariant::Kind::Wide: {
        MedianMechParams p{eps_half / static_cast<double>(k), r_l, r_u,
                           variant.theta};
        return widened_exp_mech_median(z, p, s);
      }
      case MedianVariant::Kind::SmoothSens: {
        SmoothSensParams p{eps_half, k, variant.d, variant.beta, r_l, r_u};
        return smooth_sens_median(z, p, s);
      }
    }
    throw InvalidValue("dp_theilsen: unknown median variant");
  };

  PredictionPair out{release(estimates.z25, derive_stream(seed, "median-p25")),
                     release(estimates.z75, derive_stream(seed, "median-p75"))};
  if (ledger) {
    *ledger = spend(*ledger, "dp-theilsen:p25", PrivacyBudget::pure(half));
    *ledger = spend(*ledger, "dp-theilsen:p75", PrivacyBudget::pure(half));
  }
  return out;
}

std::pair<double, double> gd_point_update(const DataPoint& point,
                                          const PredictionPair& iterate,
                                          double tau) {
  // Prediction at x for the line through (0.25, p25) and (0.75, p75).
  double yhat = 2.0 * (iterate.p25 * (0.75 - point.x) +
                       iterate.p75 * (point.x - 0.25));
  double r = point.y - yhat;
  double g25 = std::clamp(2.0 * r * (0.75 - point.x), -tau, tau);
  double g75 = std::clamp(2.0 * r * (point.x - 0.25), -tau, tau);
  return {g25, g75};
}

PredictionPair dp_grad_descent(const Dataset& d, const PrivacyBudget& budget,
                               const GradDescentParams& params, RandomSeed seed,
                               BudgetLedger* ledger) {
  budget.validate();
  const std::size_t T = params.iterations;
  if (T < 2 || T % 2 != 0) {
    throw InvalidValue("dp_grad_descent: T must be even and >= 2");
  }
  if (!(params.tau > 0)) throw InvalidValue("dp_grad_descent: tau must be > 0");

  // Per-round noise budget. Approx runs the Gaussian/zCDP path at the rho
  // obtained by inverting the zCDP -> (eps, delta) conversion.
  bool use_laplace = budget.flavor == BudgetFlavor::Pure;
  Rat rho_total;
  double per_round = 0.0;
  if (budget.flavor == BudgetFlavor::Pure) {
    if (budget.epsilon.is_zero()) throw InvalidBudget("DPGDPure: epsilon = 0");
    per_round = (budget.epsilon / Rat(static_cast<long long>(T))).to_double();
  } else if (budget.flavor == BudgetFlavor::ZCDP) {
    rho_total = budget.rho;
    per_round = (rho_total / Rat(static_cast<long long>(T))).to_double();
  } else {
    if (budget.delta.is_zero()) throw InvalidBudget("DPGDApprox: delta = 0");
    double rho = zcdp_rho_for_epsilon(budget.epsilon.to_double(),
                                      budget.delta.to_double());
    per_round = rho / static_cast<double>(T);
  }

  RngStream rng(seed);
  PredictionPair p = params.init;
  double acc25 = 0.0, acc75 = 0.0;  // accumulated squared noisy updates
  double sum25 = 0.0, sum75 = 0.0;  // running sum of the last-half iterates
  for (std::size_t t = 0; t < T; ++t) {
    double g25 = 0.0, g75 = 0.0;
    for (const auto& point : d.points()) {
      auto [u25, u75] = gd_point_update(point, p, params.tau);
      g25 += u25;
      g75 += u75;
    }
    if (use_laplace) {
      double scale = 4.0 * params.tau / per_round;
      g25 += rng.laplace(0.0, scale);
      g75 += rng.laplace(0.0, scale);
    } else {
      double sigma = 2.0 * params.tau / std::sqrt(per_round);
      g25 += rng.gaussian(0.0, sigma);
      g75 += rng.gaussian(0.0, sigma);
    }
    if (t >= T / 2) {
      sum25 += p.p25;
      sum75 += p.p75;
    }
    double step25, step75;
    if (params.per_coordinate_step) {
      acc25 += g25 * g25;
      acc75 += g75 * g75;
      step25 = acc25 > 0 ? 1.0 / std::sqrt(acc25) : 0.0;
      step75 = acc75 > 0 ? 1.0 / std::sqrt(acc75) : 0.0;
    } else {
      acc25 += g25 * g25 + g75 * g75;
      step25 = step75 = acc25 > 0 ? 1.0 / std::sqrt(acc25) : 0.0;
    }
    // The update direction is -1/2 the loss gradient, so descending means
    // moving with it, not against it.
    p.p25 += step25 * g25;
    p.p75 += step75 * g75;
  }

  if (ledger) {
    if (budget.flavor == BudgetFlavor::Pure) {
      Rat eps_t = budget.epsilon / Rat(static_cast<long long>(T));
      for (std::size_t t = 0; t < T; ++t) {
        *ledger = spend(*ledger, "dpgd-pure:round" + std::to_string(t),
                        PrivacyBudget::pure(eps_t));
      }
    } else if (budget.flavor == BudgetFlavor::ZCDP) {
      Rat rho_t = rho_total / Rat(static_cast<long long>(T));
      for (std::size_t t = 0; t < T; ++t) {
        *ledger = spend(*ledger, "dpgd-zcdp:round" + std::to_string(t),
                        PrivacyBudget::zcdp(rho_t));
      }
    } else {
      *ledger = spend(*ledger, "dpgd-approx",
                      PrivacyBudget::approx(budget.epsilon, budget.delta));
    }
  }
  double scale = 2.0 / static_cast<double>(T);
  return PredictionPair{scale * sum25, scale * sum75};
}

double zcdp_epsilon(double rho, double delta) {
  if (!(rho > 0)) throw InvalidValue("zcdp_epsilon: rho must be > 0");
  if (!(delta > 0) || delta > 1) {
    throw InvalidValue("zcdp_epsilon: delta must be in (0, 1]");
  }
  double inner = std::log(std::sqrt(std::numbers::pi * rho) / delta);
  double radicand = 4.0 * rho * inner;
  return rho + std::sqrt(std::max(0.0, radicand));
}

double zcdp_rho_for_epsilon(double epsilon, double delta) {
  if (!(epsilon > 0)) throw InvalidValue("zcdp_rho_for_epsilon: epsilon <= 0");
  // zcdp_epsilon is continuous and nondecreasing in rho with value 0 at 0+
  // and >= rho, so the root lies in (0, epsilon].
  double lo = 0.0;
  double hi = epsilon;
  for (int i = 0; i < 200 && (hi - lo) > 1e-18 * std::max(1.0, hi); ++i) {
    double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (zcdp_epsilon(mid, delta) < epsilon) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

PredictionPair noisy_intercept(const Dataset& d, const Rat& epsilon,
                               RandomSeed seed, BudgetLedger* ledger) {
  double eps = epsilon.to_double();
  if (!(eps > 0)) throw InvalidValue("noisy_intercept: epsilon must be > 0");
  const auto stats = sufficient_stats(d);
  double noisy =
      stats.ybar +
      RngStream(seed).laplace(0.0, 1.0 / (eps * static_cast<double>(stats.n)));
  if (ledger) {
    *ledger = spend(*ledger, "noisy-intercept", PrivacyBudget::pure(epsilon));
  }
  return PredictionPair{noisy, noisy};
}

MosRelease mos_release(const TractFamily& family, const Rat& epsilon,
                       RandomSeed seed, BudgetLedger* ledger) {
  if (family.tracts.empty()) throw EmptyFamily("mos_release: empty family");
  double eps = epsilon.to_double();
  if (!(eps > 0)) throw InvalidValue("mos_release: epsilon must be > 0");

  // State median of the explanatory (parent percentile) values.
  std::vector<double> all_x;
  for (const auto& [id, tract] : family.tracts) {
    for (const auto& p : tract.points()) all_x.push_back(p.x);
  }
  double state_median = median_midpoint(std::move(all_x));

  auto eligible = [&](const Dataset& tract) {
    if (tract.size() < 20) return false;
    std::size_t above = 0, below = 0;
    for (const auto& p : tract.points()) {
      if (p.x > state_median) ++above;
      if (p.x < state_median) ++below;
    }
    double n = static_cast<double>(tract.size());
    return above >= 0.10 * n && below >= 0.10 * n;
  };

  // Lower-bound each eligible tract's local sensitivity by adding grid
  // points from an 11x11 grid over the unit square and recording the largest
  // change in each released prediction.
  struct TractInfo {
    bool eligible = false;
    PredictionPair fit;
    double ls25 = 0.0;
    double ls75 = 0.0;
  };
  std::vector<TractInfo> infos(family.tracts.size());
  double mos25 = 0.0, mos75 = 0.0;
  bool any_eligible = false;
  for (std::size_t ti = 0; ti < family.tracts.size(); ++ti) {
    const Dataset& tract = family.tracts[ti].second;
    auto& info = infos[ti];
    info.eligible = eligible(tract);
    if (!info.eligible) continue;
    any_eligible = true;
    auto base = ols_predictions(ols_fit(tract));
    info.fit = base;
    std::vector<DataPoint> extended(tract.points());
    extended.emplace_back();
    for (int gi = 0; gi <= 10; ++gi) {
      for (int gj = 0; gj <= 10; ++gj) {
        extended.back() = DataPoint{gi / 10.0, gj / 10.0};
        Dataset with_grid(extended, RangePolicy::Clip);
        auto moved = ols_predictions(ols_fit(with_grid));
        info.ls25 = std::max(info.ls25, std::fabs(moved.p25 - base.p25));
        info.ls75 = std::max(info.ls75, std::fabs(moved.p75 - base.p75));
      }
    }
    mos25 = std::max(mos25, info.ls25);
    mos75 = std::max(mos75, info.ls75);
  }

  MosRelease out;
  out.mos25 = mos25;
  out.mos75 = mos75;
  // Noise magnitude is the state envelope divided by the tract count; the
  // epsilon the deployment quotes is a label on the envelope computation,
  // not a scale divisor.
  for (std::size_t ti = 0; ti < family.tracts.size(); ++ti) {
    const auto& [id, tract] = family.tracts[ti];
    if (!infos[ti].eligible || !any_eligible) {
      out.tracts.emplace_back(id, std::nullopt);
      continue;
    }
    RngStream rng(derive_stream(seed, "mos:" + id));
    double n = static_cast<double>(tract.size());
    double p25 = infos[ti].fit.p25;
    double p75 = infos[ti].fit.p75;
    if (mos25 > 0) p25 += rng.laplace(0.0, mos25 / n);
    if (mos75 > 0) p75 += rng.laplace(0.0, mos75 / n);
    out.tracts.emplace_back(id, PredictionPair{p25, p75});
  }
  if (ledger) {
    *ledger = spend(*ledger, "oi-mos(heuristic,not-DP)",
                    PrivacyBudget::pure(epsilon));
  }
  return out;
}

}  // namespace dpslr
