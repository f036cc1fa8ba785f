#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dpslr/dp_regression.hpp"
#include "dpslr/rng.hpp"
#include "dpslr/types.hpp"

namespace dpslr {

// Synthetic linear-model generator: x_i uniform with the given mean and
// variance (support xbar +- sqrt(3*sigma_x2)), y_i = alpha*x_i + beta +
// N(0, sigma_e2), both coordinates clipped to [0,1].
struct SyntheticSpec {
  std::size_t n = 30;
  double sigma_x2 = 0.02;   // > 0
  double sigma_e2 = 0.01;   // >= 0
  double alpha = 0.5;
  double beta = 0.2;
  double xbar = 0.5;
  double x_new = 0.25;      // evaluation point used by sweeps
};

struct SyntheticData {
  Dataset dataset;
  PredictionPair truth;      // pre-clipping predictions at 0.25 / 0.75
  double clipped_fraction;   // coordinates clamped / total coordinates
  bool support_warning;      // uniform support left [0,1] before clipping
};

SyntheticData gen_synthetic(const SyntheticSpec& spec, RandomSeed seed);

// Parameters of one simulated census tract. Parent incomes are lognormal
// with moments matched to the public mean mu and Var = 4 * var_mu; child
// income follows ln(child) = alpha_tm + beta_tm * ln(parent) + N(0, 0.2^2).
struct TractSpec {
  double mu = 50.0;        // public mean income, > 0
  double alpha_tm = 0.3;
  double beta_tm = 0.9;
  double var_mu = 100.0;   // sampling variance of the mean estimate, > 0
};

// Raw incomes for one tract, before percentile ranking.
struct TractIncomes {
  std::vector<double> parent;
  std::vector<double> child;
};

// floor(Exp(52) + 20) individuals; always >= 20.
std::size_t sample_tract_size(RandomSeed seed);

TractIncomes gen_oi_incomes(const TractSpec& spec, std::size_t n,
                            RandomSeed seed);

// Lone tract: ranks are within-tract (a family ranks within the state).
// x = parent percentile, y = child percentile, each rounded up to 2 decimals.
Dataset gen_oi_tract(const TractSpec& spec, RandomSeed seed);

// A state's worth of tracts with percentiles computed against the pooled
// state income distributions.
TractFamily gen_oi_family(const std::string& state_id,
                          std::span<const TractSpec> specs, RandomSeed seed);

}  // namespace dpslr
