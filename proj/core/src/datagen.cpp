#include "dpslr/datagen.hpp"

#include <algorithm>
#include <cmath>

#include "dpslr/errors.hpp"

namespace dpslr {

namespace {

void check_spec(const SyntheticSpec& spec) {
  if (spec.n < 2) throw InvalidSpec("synthetic spec: n must be >= 2");
  if (!(spec.sigma_x2 > 0)) throw InvalidSpec("synthetic spec: sigma_x2 <= 0");
  if (spec.sigma_e2 < 0) throw InvalidSpec("synthetic spec: sigma_e2 < 0");
  if (spec.x_new < 0 || spec.x_new > 1) {
    throw InvalidSpec("synthetic spec: x_new outside [0,1]");
  }
}

// Percentile rank of v within the sorted sample, rounded up to 2 decimals.
double percentile_rank(const std::vector<double>& sorted, double v) {
  auto at_most = std::upper_bound(sorted.begin(), sorted.end(), v) -
                 sorted.begin();
  double rank =
      static_cast<double>(at_most) / static_cast<double>(sorted.size());
  return std::ceil(rank * 100.0) / 100.0;
}

Dataset rank_to_dataset(const TractIncomes& incomes,
                        const std::vector<double>& parents_sorted,
                        const std::vector<double>& children_sorted) {
  std::vector<DataPoint> points;
  points.reserve(incomes.parent.size());
  for (std::size_t i = 0; i < incomes.parent.size(); ++i) {
    points.push_back(
        DataPoint{percentile_rank(parents_sorted, incomes.parent[i]),
                  percentile_rank(children_sorted, incomes.child[i])});
  }
  return Dataset(std::move(points), RangePolicy::Clip);
}

}  // namespace

SyntheticData gen_synthetic(const SyntheticSpec& spec, RandomSeed seed) {
  check_spec(spec);
  double half_width = std::sqrt(3.0 * spec.sigma_x2);
  bool support_warning =
      spec.xbar - half_width < 0.0 || spec.xbar + half_width > 1.0;

  RngStream rng(seed);
  std::vector<DataPoint> points;
  points.reserve(spec.n);
  std::size_t clipped = 0;
  double sigma_e = std::sqrt(spec.sigma_e2);
  for (std::size_t i = 0; i < spec.n; ++i) {
    double x = rng.uniform(spec.xbar - half_width, spec.xbar + half_width);
    double y = spec.alpha * x + spec.beta + rng.gaussian(0.0, sigma_e);
    double cx = clip_unit(x);
    double cy = clip_unit(y);
    clipped += (cx != x) + (cy != y);
    points.push_back(DataPoint{cx, cy});
  }
  PredictionPair truth{0.25 * spec.alpha + spec.beta,
                       0.75 * spec.alpha + spec.beta};
  return SyntheticData{Dataset(std::move(points), RangePolicy::Clip), truth,
                       static_cast<double>(clipped) /
                           static_cast<double>(2 * spec.n),
                       support_warning};
}

std::size_t sample_tract_size(RandomSeed seed) {
  return static_cast<std::size_t>(
      std::floor(RngStream(seed).exponential(52.0) + 20.0));
}

TractIncomes gen_oi_incomes(const TractSpec& spec, std::size_t n,
                            RandomSeed seed) {
  if (!(spec.mu > 0)) throw InvalidSpec("tract spec: mu must be > 0");
  if (!(spec.var_mu > 0)) throw InvalidSpec("tract spec: var_mu must be > 0");
  double var = 4.0 * spec.var_mu;
  double mean_ln = 2.0 * std::log(spec.mu) -
                   0.5 * std::log(var + spec.mu * spec.mu);
  double var_ln = -2.0 * std::log(spec.mu) + std::log(var + spec.mu * spec.mu);
  if (!(var_ln > 0)) {
    throw InvalidSpec("tract spec: derived Var[ln y] not positive");
  }

  RngStream rng(seed);
  TractIncomes incomes;
  incomes.parent.reserve(n);
  incomes.child.reserve(n);
  double sd_ln = std::sqrt(var_ln);
  for (std::size_t i = 0; i < n; ++i) {
    double ln_parent = rng.gaussian(mean_ln, sd_ln);
    double ln_child =
        spec.alpha_tm + spec.beta_tm * ln_parent + rng.gaussian(0.0, 0.20);
    incomes.parent.push_back(std::exp(ln_parent));
    incomes.child.push_back(std::exp(ln_child));
  }
  return incomes;
}

Dataset gen_oi_tract(const TractSpec& spec, RandomSeed seed) {
  std::size_t n = sample_tract_size(derive_stream(seed, "tract-size"));
  auto incomes = gen_oi_incomes(spec, n, derive_stream(seed, "incomes"));
  auto parents_sorted = incomes.parent;
  auto children_sorted = incomes.child;
  std::sort(parents_sorted.begin(), parents_sorted.end());
  std::sort(children_sorted.begin(), children_sorted.end());
  return rank_to_dataset(incomes, parents_sorted, children_sorted);
}

TractFamily gen_oi_family(const std::string& state_id,
                          std::span<const TractSpec> specs, RandomSeed seed) {
  if (specs.empty()) throw EmptyFamily("gen_oi_family: no tract specs");
  std::vector<TractIncomes> tract_incomes;
  tract_incomes.reserve(specs.size());
  std::vector<double> parents_sorted;
  std::vector<double> children_sorted;
  for (std::size_t t = 0; t < specs.size(); ++t) {
    RandomSeed tract_seed = derive_stream(seed, t);
    std::size_t n = sample_tract_size(derive_stream(tract_seed, "tract-size"));
    auto incomes =
        gen_oi_incomes(specs[t], n, derive_stream(tract_seed, "incomes"));
    parents_sorted.insert(parents_sorted.end(), incomes.parent.begin(),
                          incomes.parent.end());
    children_sorted.insert(children_sorted.end(), incomes.child.begin(),
                           incomes.child.end());
    tract_incomes.push_back(std::move(incomes));
  }
  std::sort(parents_sorted.begin(), parents_sorted.end());
  std::sort(children_sorted.begin(), children_sorted.end());

  TractFamily family;
  family.state_id = state_id;
  for (std::size_t t = 0; t < specs.size(); ++t) {
    family.tracts.emplace_back(
        state_id + "-tract" + std::to_string(t),
        rank_to_dataset(tract_incomes[t], parents_sorted, children_sorted));
  }
  return family;
}

}  // namespace dpslr
