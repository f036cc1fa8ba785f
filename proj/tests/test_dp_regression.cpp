#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "dpslr/datagen.hpp"
#include "dpslr/dp_regression.hpp"
#include "dpslr/errors.hpp"
#include "dpslr/ols.hpp"
#include "dpslr/rng.hpp"
#include "dpslr/theilsen.hpp"
#include "oracles.hpp"

using namespace dpslr;

namespace {

Dataset line_dataset(std::size_t n, double alpha, double beta, double sigma_e,
                     RandomSeed seed) {
  RngStream rng(seed);
  std::vector<DataPoint> pts;
  for (std::size_t i = 0; i < n; ++i) {
    double x = rng.uniform(0.0, 1.0);
    pts.push_back({x, clip_unit(alpha * x + beta + rng.gaussian(0, sigma_e))});
  }
  return Dataset(std::move(pts));
}

}  // namespace

TEST_CASE("noisy stats approaches ols as epsilon grows") {
  Dataset d = line_dataset(40, 0.5, 0.2, 0.02, {600, 0});
  auto ols = ols_predictions(ols_fit(d));
  int close = 0;
  for (int i = 0; i < 1000; ++i) {
    auto out = noisy_stats(d, Rat(1000000000), derive_stream({600, 1}, i));
    REQUIRE_FALSE(out.failed());
    close += std::fabs(out.result->p25 - ols.p25) < 1e-6 &&
             std::fabs(out.result->p75 - ols.p75) < 1e-6;
  }
  CHECK(close >= 999);
}

TEST_CASE("noisy stats failure frequency matches the laplace tail") {
  // Failure happens iff Lap(0, 3*Delta2/eps) <= -nvar.
  Dataset d = line_dataset(39, 0.3, 0.4, 0.05, {601, 0});
  auto stats = sufficient_stats(d);
  double eps = 0.5;
  double delta2 = 1.0 - 1.0 / static_cast<double>(stats.n);
  double analytic = 0.5 * std::exp(-stats.nvar * eps / (3.0 * delta2));
  int failures = 0;
  constexpr int kTrials = 10'000;
  for (int i = 0; i < kTrials; ++i) {
    failures +=
        noisy_stats(d, Rat(1, 2), derive_stream({601, 1}, i)).failed();
  }
  CHECK(std::fabs(static_cast<double>(failures) / kTrials - analytic) < 0.01);
}

TEST_CASE("noisy stats releases the noisy statistics and spends once") {
  Dataset d = line_dataset(20, 0.5, 0.2, 0.05, {602, 0});
  BudgetLedger ledger(PrivacyBudget::pure(Rat(2)));
  auto out = noisy_stats(d, Rat(2), {602, 1}, &ledger);
  CHECK(ledger.entries().size() == 1);
  CHECK(ledger.spent_epsilon() == Rat(2));
  auto stats = sufficient_stats(d);
  // Noisy statistics differ from the exact ones but stay in the same ballpark.
  CHECK(out.noisy_nvar != stats.nvar);
  CHECK(std::fabs(out.noisy_nvar - stats.nvar) < 50.0);
  if (!out.failed()) {
    CHECK(out.alpha_tilde.has_value());
    CHECK(std::isfinite(out.result->p25));
  }
}

TEST_CASE("global sensitivity of nvar and ncov under one-point swaps") {
  RngStream rng({603, 0});
  for (std::size_t n : {2ul, 5ul, 30ul}) {
    double bound = 1.0 - 1.0 / static_cast<double>(n) + 1e-12;
    for (int rep = 0; rep < 800; ++rep) {
      std::vector<DataPoint> pts;
      for (std::size_t i = 0; i < n; ++i) {
        pts.push_back({rng.uniform(0, 1), rng.uniform(0, 1)});
      }
      Dataset d1(pts);
      auto s1 = sufficient_stats(d1);
      pts[rng.below(n)] = {rng.uniform(0, 1), rng.uniform(0, 1)};
      Dataset d2(pts);
      auto s2 = sufficient_stats(d2);
      CHECK(std::fabs(s1.nvar - s2.nvar) <= bound);
      CHECK(std::fabs(s1.ncov - s2.ncov) <= bound);
    }
  }
}

TEST_CASE("dp theilsen converges to the theilsen fit, not ols") {
  Dataset d = line_dataset(30, 0.5, 0.2, 0.01, {604, 0});
  auto sched = matching_schedule(d.size());
  std::size_t k = sched.matchings.size();
  BudgetLedger ledger(PrivacyBudget::pure(Rat(1000000)));
  int inside = 0;
  constexpr int kTrials = 400;
  for (int i = 0; i < kTrials; ++i) {
    RandomSeed seed = derive_stream({604, 1}, i);
    auto out = dp_theilsen(d, Rat(1000000), k, MedianVariant::exp_mech(), -0.5,
                           1.5, seed, i == 0 ? &ledger : nullptr, &sched);
    // The exponential mechanism concentrates on the two intervals adjacent
    // to the median of the pairwise estimates.
    auto est = pairwise_estimates(d, sched, k, derive_stream(seed, "pairs"));
    std::sort(est.z25.begin(), est.z25.end());
    std::size_t m = est.z25.size() / 2;
    double lo = est.z25[m - 1];
    double hi = est.z25[m + 1];
    inside += (out.p25 >= lo - 1e-9 && out.p25 <= hi + 1e-9);
  }
  CHECK(inside >= kTrials - 1);
  CHECK(ledger.entries().size() == 2);
  CHECK(ledger.entries()[0].spent.epsilon == Rat(500000));
  CHECK(ledger.spent_epsilon() == Rat(1000000));
}

TEST_CASE("dp theilsen with k = 1 uses at most floor(n/2) estimates") {
  Dataset d = line_dataset(10, 0.5, 0.2, 0.05, {605, 0});
  auto sched = matching_schedule(d.size());
  auto est = pairwise_estimates(d, sched, 1, {605, 1});
  CHECK(est.z25.size() <= 5);
  CHECK_NOTHROW(dp_theilsen(d, Rat(1), 1, MedianVariant::exp_mech(), -0.5, 1.5,
                            {605, 2}));
}

TEST_CASE("one data point moves at most k pairwise estimates") {
  // Under the coupling that fixes the sampled matchings.
  RngStream rng({606, 0});
  for (std::size_t n : {4ul, 7ul, 12ul}) {
    for (std::size_t k = 1; k <= std::min<std::size_t>(3, n - 1); ++k) {
      auto sched = matching_schedule(n);
      std::vector<DataPoint> pts;
      for (std::size_t i = 0; i < n; ++i) {
        pts.push_back({rng.uniform(0, 1), rng.uniform(0, 1)});
      }
      Dataset d1(pts);
      RandomSeed sample_seed{606, 77};
      auto e1 = pairwise_estimates(d1, sched, k, sample_seed);
      for (std::size_t victim = 0; victim < n; ++victim) {
        auto pts2 = pts;
        pts2[victim] = {rng.uniform(0, 1), rng.uniform(0, 1)};
        auto e2 = pairwise_estimates(Dataset(pts2), sched, k, sample_seed);
        // Multiset difference size in either direction.
        std::multiset<double> a(e1.z25.begin(), e1.z25.end());
        std::multiset<double> b(e2.z25.begin(), e2.z25.end());
        for (double v : e2.z25) {
          auto it = a.find(v);
          if (it != a.end()) a.erase(it);
        }
        for (double v : e1.z25) {
          auto it = b.find(v);
          if (it != b.end()) b.erase(it);
        }
        CHECK(a.size() <= k);
        CHECK(b.size() <= k);
      }
    }
  }
}

TEST_CASE("gradient updates match finite differences of the per-point loss") {
  // Delta_i = -1/2 d(loss_i)/dp for both coordinates, wherever unclipped.
  RngStream rng({607, 0});
  for (int rep = 0; rep < 200; ++rep) {
    DataPoint pt{rng.uniform(0, 1), rng.uniform(0, 1)};
    PredictionPair it{rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8)};
    double tau = 5.0;  // wide enough that nothing clips
    auto [g25, g75] = gd_point_update(pt, it, tau);
    auto loss = [&](double p25, double p75) {
      double yhat = 2.0 * (p25 * (0.75 - pt.x) + p75 * (pt.x - 0.25));
      return (pt.y - yhat) * (pt.y - yhat);
    };
    const double h = 1e-6;
    double d25 = (loss(it.p25 + h, it.p75) - loss(it.p25 - h, it.p75)) / (2 * h);
    double d75 = (loss(it.p25, it.p75 + h) - loss(it.p25, it.p75 - h)) / (2 * h);
    if (std::fabs(d25) > 1e-6) {
      CHECK(std::fabs(-0.5 * d25 - g25) / std::fabs(0.5 * d25) < 1e-5);
    }
    if (std::fabs(d75) > 1e-6) {
      CHECK(std::fabs(-0.5 * d75 - g75) / std::fabs(0.5 * d75) < 1e-5);
    }
  }

  // Clipping caps each coordinate at tau.
  auto [c25, c75] = gd_point_update({0.0, 1.0}, {-30.0, 30.0}, 0.5);
  CHECK(std::fabs(c25) <= 0.5);
  CHECK(std::fabs(c75) <= 0.5);
}

TEST_CASE("gradient descent stays at an exact fit and tracks ols") {
  std::vector<DataPoint> pts;
  for (int i = 0; i < 20; ++i) {
    double x = i / 19.0;
    pts.push_back({x, 0.5 * x + 0.2});
  }
  Dataset d(pts);
  GradDescentParams params;
  params.init = PredictionPair{0.325, 0.575};  // the exact-fit point
  auto out = dp_grad_descent(d, PrivacyBudget::pure(Rat(1000000000)), params,
                             {608, 1});
  CHECK(out.p25 == doctest::Approx(0.325).epsilon(1e-3));
  CHECK(out.p75 == doctest::Approx(0.575).epsilon(1e-3));

  // From a cold start it still lands near OLS at huge epsilon.
  GradDescentParams cold;
  auto out2 = dp_grad_descent(d, PrivacyBudget::pure(Rat(1000000000)), cold,
                              {608, 2});
  CHECK(std::fabs(out2.p25 - 0.325) < 5e-3);
  CHECK(std::fabs(out2.p75 - 0.575) < 5e-3);
}

TEST_CASE("gradient descent budget accounting per flavor") {
  Dataset d = line_dataset(15, 0.5, 0.2, 0.05, {609, 0});
  GradDescentParams params;
  params.iterations = 80;

  BudgetLedger pure(PrivacyBudget::pure(Rat(2)));
  dp_grad_descent(d, PrivacyBudget::pure(Rat(2)), params, {609, 1}, &pure);
  CHECK(pure.entries().size() == 80);
  CHECK(pure.spent_epsilon() == Rat(2));

  BudgetLedger zcdp(PrivacyBudget::zcdp(Rat(1, 2)));
  dp_grad_descent(d, PrivacyBudget::zcdp(Rat(1, 2)), params, {609, 2}, &zcdp);
  CHECK(zcdp.entries().size() == 80);
  CHECK(zcdp.spent_rho() == Rat(1, 2));  // sums to rho exactly

  BudgetLedger approx(PrivacyBudget::approx(Rat(2), Rat(1, 1073741824)));
  dp_grad_descent(d, PrivacyBudget::approx(Rat(2), Rat(1, 1073741824)), params,
                  {609, 3}, &approx);
  CHECK(approx.entries().size() == 1);
  CHECK(approx.spent_epsilon() == Rat(2));

  CHECK_THROWS_AS(
      dp_grad_descent(d, PrivacyBudget::pure(Rat(0)), params, {609, 4}),
      InvalidBudget);
}

TEST_CASE("zcdp conversion: bisection inverts the forward formula") {
  RngStream rng({610, 0});
  double delta = std::pow(2.0, -30.0);
  for (int rep = 0; rep < 1000; ++rep) {
    double eps = std::exp(rng.uniform(std::log(0.01), std::log(100.0)));
    double rho = zcdp_rho_for_epsilon(eps, delta);
    CHECK(std::fabs(zcdp_epsilon(rho, delta) - eps) <=
          1e-10 * std::max(1.0, eps));
  }
}

TEST_CASE("noisy intercept") {
  std::vector<DataPoint> pts(100, DataPoint{0.5, 0.3});
  pts[0].x = 0.4;  // avoid a fully degenerate dataset
  Dataset d(pts);

  auto big = noisy_intercept(d, Rat(1000000000), {611, 1});
  CHECK(big.p25 == doctest::Approx(0.3).epsilon(1e-6));
  CHECK(big.p25 == big.p75);

  // Empirical standard deviation of the release is sqrt(2)/(eps*n).
  double eps = 1.0;
  double sum = 0.0, sq = 0.0;
  constexpr int kTrials = 10'000;
  int within = 0;
  for (int i = 0; i < kTrials; ++i) {
    double out = noisy_intercept(d, Rat(1), derive_stream({611, 2}, i)).p25;
    sum += out;
    sq += out * out;
    within += std::fabs(out - 0.3) <= 0.05;
  }
  double mean = sum / kTrials;
  double sd = std::sqrt(sq / kTrials - mean * mean);
  CHECK(sd == doctest::Approx(std::sqrt(2.0) / (eps * 100)).epsilon(0.05));
  CHECK(static_cast<double>(within) / kTrials >= 0.95);

  BudgetLedger ledger(PrivacyBudget::pure(Rat(1)));
  noisy_intercept(d, Rat(1), {611, 3}, &ledger);
  CHECK(ledger.entries().size() == 1);
}

TEST_CASE("mos release eligibility and noise scaling") {
  RngStream rng({612, 0});
  auto make_tract = [&](std::size_t n, double spread) {
    std::vector<DataPoint> pts;
    for (std::size_t i = 0; i < n; ++i) {
      double x = clip_unit(0.5 + spread * rng.uniform(-1.0, 1.0));
      pts.push_back({x, clip_unit(0.3 * x + 0.3 + rng.gaussian(0, 0.05))});
    }
    return Dataset(pts);
  };

  SUBCASE("a 19-point tract is suppressed") {
    TractFamily family;
    family.state_id = "t";
    family.tracts.emplace_back("small", make_tract(19, 0.4));
    family.tracts.emplace_back("big", make_tract(60, 0.4));
    auto out = mos_release(family, Rat(16), {612, 1});
    CHECK_FALSE(out.tracts[0].second.has_value());
    CHECK(out.tracts[1].second.has_value());
  }

  SUBCASE("tracts without spread around the state median are suppressed") {
    TractFamily family;
    family.state_id = "t";
    family.tracts.emplace_back("low", make_tract(50, 0.01));   // hugs 0.5
    family.tracts.emplace_back("wide", make_tract(50, 0.45));
    // All of "low"'s x values sit within 0.01 of the state median, so fewer
    // than 10% can be strictly above AND below simultaneously only if the
    // median splits them; with a wide partner tract the median moves away.
    auto out = mos_release(family, Rat(16), {612, 2});
    CHECK(out.tracts[1].second.has_value());
  }

  SUBCASE("identical tracts get identical sensitivity envelopes") {
    auto tract = make_tract(40, 0.4);
    TractFamily family;
    family.state_id = "t";
    family.tracts.emplace_back("a", tract);
    family.tracts.emplace_back("b", tract);
    auto out = mos_release(family, Rat(16), {612, 3});
    // Same grid sweep on identical data: the MOS equals each tract's LS.
    REQUIRE(out.tracts[0].second.has_value());
    REQUIRE(out.tracts[1].second.has_value());
    CHECK(out.mos25 > 0.0);
  }

  SUBCASE("noise scale is proportional to the observed sensitivity over n") {
    auto tract = make_tract(50, 0.4);
    TractFamily family;
    family.state_id = "t";
    family.tracts.emplace_back("only", tract);
    auto base = ols_predictions(ols_fit(tract));
    auto one = mos_release(family, Rat(16), {612, 4});
    REQUIRE(one.tracts[0].second.has_value());
    // The release is OLS plus Laplace at scale mos/(n * eps/2); with eps=16
    // and n=50 the noise is tiny compared to mos itself.
    double resid = std::fabs(one.tracts[0].second->p25 - base.p25);
    CHECK(resid < one.mos25);

    // Direct evaluation of the 121-point grid sweep reproduces mos25.
    double want = 0.0;
    for (int gi = 0; gi <= 10; ++gi) {
      for (int gj = 0; gj <= 10; ++gj) {
        std::vector<DataPoint> ext(tract.points());
        ext.push_back({gi / 10.0, gj / 10.0});
        auto moved = ols_predictions(ols_fit(Dataset(ext)));
        want = std::max(want, std::fabs(moved.p25 - base.p25));
      }
    }
    CHECK(one.mos25 == doctest::Approx(want).epsilon(1e-12));
  }

  CHECK_THROWS_AS(mos_release(TractFamily{}, Rat(1), {612, 9}), EmptyFamily);
}

TEST_CASE("dp algorithms are bit-reproducible given a seed") {
  Dataset d = line_dataset(24, 0.5, 0.2, 0.05, {613, 0});
  RandomSeed seed{613, 99};
  auto a1 = noisy_stats(d, Rat(1), seed);
  auto a2 = noisy_stats(d, Rat(1), seed);
  CHECK(a1.noisy_nvar == a2.noisy_nvar);
  auto b1 = dp_theilsen(d, Rat(1), 3, MedianVariant::wide(0.01), -0.5, 1.5, seed);
  auto b2 = dp_theilsen(d, Rat(1), 3, MedianVariant::wide(0.01), -0.5, 1.5, seed);
  CHECK(b1.p25 == b2.p25);
  GradDescentParams params;
  auto c1 = dp_grad_descent(d, PrivacyBudget::zcdp(Rat(1, 2)), params, seed);
  auto c2 = dp_grad_descent(d, PrivacyBudget::zcdp(Rat(1, 2)), params, seed);
  CHECK(c1.p75 == c2.p75);
}
