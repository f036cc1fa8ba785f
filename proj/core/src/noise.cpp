#include "dpslr/noise.hpp"

namespace dpslr {

double sample_laplace(const LaplaceParams& p, RandomSeed seed) {
  return RngStream(seed).laplace(p.location, p.scale);
}

double sample_gumbel(RandomSeed seed) { return RngStream(seed).gumbel(); }

double sample_students_t(const StudentsTParams& p, RandomSeed seed) {
  return RngStream(seed).students_t(p.d);
}

double sample_uniform(double lo, double hi, RandomSeed seed) {
  return RngStream(seed).uniform(lo, hi);
}

double sample_gaussian(double mu, double sigma, RandomSeed seed) {
  return RngStream(seed).gaussian(mu, sigma);
}

double sample_exponential(double scale, RandomSeed seed) {
  return RngStream(seed).exponential(scale);
}

}  // namespace dpslr
