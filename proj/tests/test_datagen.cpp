#include <cmath>
#include <set>

#include "doctest.h"
#include "dpslr/datagen.hpp"
#include "dpslr/errors.hpp"
#include "dpslr/ols.hpp"

using namespace dpslr;

TEST_CASE("synthetic generator with zero noise lies on the line") {
  SyntheticSpec spec;
  spec.n = 200;
  spec.sigma_e2 = 0.0;
  auto data = gen_synthetic(spec, {700, 0});
  for (const auto& p : data.dataset.points()) {
    CHECK(p.y == doctest::Approx(0.5 * p.x + 0.2).epsilon(1e-12));
  }
  CHECK(data.clipped_fraction == 0.0);
  CHECK_FALSE(data.support_warning);
  CHECK(data.truth.p25 == doctest::Approx(0.325));
  CHECK(data.truth.p75 == doctest::Approx(0.575));
}

TEST_CASE("synthetic x variance matches the spec") {
  SyntheticSpec spec;
  spec.n = 100'000;
  spec.sigma_x2 = 0.02;
  spec.sigma_e2 = 0.0;
  auto data = gen_synthetic(spec, {700, 1});
  auto stats = sufficient_stats(data.dataset);
  double var = stats.nvar / static_cast<double>(spec.n);
  CHECK(var == doctest::Approx(0.02).epsilon(0.02));
}

TEST_CASE("truth is seed independent, the sample is not") {
  SyntheticSpec spec;
  auto a = gen_synthetic(spec, {700, 2});
  auto b = gen_synthetic(spec, {700, 3});
  CHECK(a.truth.p25 == b.truth.p25);
  CHECK(a.dataset[0].x != b.dataset[0].x);
}

TEST_CASE("support warning and clipping report") {
  SyntheticSpec spec;
  spec.xbar = 0.9;
  spec.sigma_x2 = 0.05;  // support reaches past 1
  spec.n = 2000;
  spec.sigma_e2 = 0.0;
  auto data = gen_synthetic(spec, {700, 4});
  CHECK(data.support_warning);
  CHECK(data.clipped_fraction > 0.0);
  for (const auto& p : data.dataset.points()) {
    CHECK(p.x <= 1.0);
    CHECK(p.y <= 1.0);
  }
}

TEST_CASE("invalid synthetic specs") {
  SyntheticSpec bad;
  bad.sigma_x2 = 0.0;
  CHECK_THROWS_AS(gen_synthetic(bad, {700, 5}), InvalidSpec);
}

TEST_CASE("tract sizes are floor(Exp(52) + 20)") {
  double sum = 0.0;
  std::size_t min_size = 1'000'000;
  constexpr int kDraws = 10'000;
  for (int i = 0; i < kDraws; ++i) {
    std::size_t n = sample_tract_size({701, static_cast<std::uint64_t>(i)});
    sum += static_cast<double>(n);
    min_size = std::min(min_size, n);
  }
  CHECK(min_size >= 20);
  // E[floor(Exp(52) + 20)] = 52 + 20 - E[frac] which is about 71.5.
  CHECK(sum / kDraws == doctest::Approx(71.5).epsilon(0.02));
}

TEST_CASE("log income moments match the stated formulas") {
  TractSpec spec;
  spec.mu = 50.0;
  spec.var_mu = 100.0;
  double var = 4.0 * spec.var_mu;
  double want_mean = 2.0 * std::log(spec.mu) -
                     0.5 * std::log(var + spec.mu * spec.mu);
  double want_var = -2.0 * std::log(spec.mu) +
                    std::log(var + spec.mu * spec.mu);

  auto incomes = gen_oi_incomes(spec, 100'000, {702, 0});
  double mean = 0.0, sq = 0.0;
  for (double y : incomes.parent) {
    double ln = std::log(y);
    mean += ln;
    sq += ln * ln;
  }
  mean /= static_cast<double>(incomes.parent.size());
  double sample_var = sq / static_cast<double>(incomes.parent.size()) -
                      mean * mean;
  CHECK(mean == doctest::Approx(want_mean).epsilon(0.02));
  CHECK(sample_var == doctest::Approx(want_var).epsilon(0.02));
}

TEST_CASE("tract percentiles live on a 2-decimal grid in (0, 1]") {
  TractSpec spec;
  auto tract = gen_oi_tract(spec, {703, 0});
  CHECK(tract.size() >= 20);
  for (const auto& p : tract.points()) {
    CHECK(p.x >= 0.0);
    CHECK(p.x <= 1.0);
    CHECK(p.x * 100.0 == doctest::Approx(std::round(p.x * 100.0)).epsilon(1e-9));
    CHECK(p.y * 100.0 == doctest::Approx(std::round(p.y * 100.0)).epsilon(1e-9));
  }
}

TEST_CASE("family ranks against the pooled state distribution") {
  std::vector<TractSpec> specs(3);
  specs[0].mu = 30.0;
  specs[1].mu = 50.0;
  specs[2].mu = 90.0;
  auto family = gen_oi_family("XX", specs, {704, 0});
  REQUIRE(family.tracts.size() == 3);
  // Richer tracts should sit higher in the pooled parent ranking.
  auto mean_x = [](const Dataset& d) {
    double s = 0;
    for (const auto& p : d.points()) s += p.x;
    return s / static_cast<double>(d.size());
  };
  CHECK(mean_x(family.tracts[0].second) < mean_x(family.tracts[2].second));
}
