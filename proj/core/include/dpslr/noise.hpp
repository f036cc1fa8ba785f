#pragma once

#include "dpslr/rng.hpp"

namespace dpslr {

struct LaplaceParams {
  double location = 0.0;
  double scale = 1.0;  // > 0
};

struct StudentsTParams {
  int d = 3;  // degrees of freedom, >= 1
};

// One-shot draws: each is a pure function of (params, seed). Mechanisms that
// need several draws construct an RngStream once and pull from it in a fixed
// order instead.
double sample_laplace(const LaplaceParams& p, RandomSeed seed);
double sample_gumbel(RandomSeed seed);
double sample_students_t(const StudentsTParams& p, RandomSeed seed);
double sample_uniform(double lo, double hi, RandomSeed seed);
double sample_gaussian(double mu, double sigma, RandomSeed seed);
double sample_exponential(double scale, RandomSeed seed);

}  // namespace dpslr
