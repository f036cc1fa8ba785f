#pragma once

#include <cstddef>
#include <span>

#include "dpslr/rng.hpp"

namespace dpslr {

// Inputs shared by the interval-sampling median mechanisms. epsilon is the
// post-division budget: when these run inside DPTheilSenkMatch the caller has
// already divided the release budget by k (Lipschitz composition), so the
// mechanism applies epsilon as-is.
struct MedianMechParams {
  double epsilon = 1.0;   // > 0
  double r_l = -0.5;      // output/search range
  double r_u = 1.5;
  double theta = 0.0;     // widening; > 0 for the widened mechanism
};

// Exponential mechanism for the median via interval sampling: clip z to
// [r_l, r_u], insert the endpoints, then per interval i score
//   log(length_i) - (epsilon/2) * ceil(|i - n/2|)
// and pick the argmax after i.i.d. Gumbel noise (equivalent to exponential-
// mechanism selection); the release is uniform inside the chosen interval.
// Zero-length intervals are skipped. Throws EmptyInput / InvalidRange.
double exp_mech_median(std::span<const double> z, const MedianMechParams& p,
                       RandomSeed seed);

// Theta-widened variant: if |z| is even the true median (midpoint) is
// inserted first; then the lower half shifts down by theta and the upper
// half up by theta, clamped to [r_l, r_u], before interval sampling. This
// grants the full score to a 2*theta window around the median, which is what
// rescues concentrated inputs from the uniform-output behavior of the plain
// mechanism.
double widened_exp_mech_median(std::span<const double> z,
                               const MedianMechParams& p, RandomSeed seed);

// t-smooth upper bound on the local sensitivity of the median of z, where
// one step of the underlying dataset moves at most k entries of z:
//
//   S = max over l >= 0 of e^{-l t} * max_{s = 0..k(l+1)}
//         ( z_{m+s} - z_{m-k(l+1)+s} )
//
// with m the median index (lower middle for even sizes) and indices past the
// ends padded by r_l / r_u, the extreme values clipped estimates can take.
// z must be sorted ascending.
double smooth_sensitivity(std::span<const double> sorted_z, std::size_t k,
                          double t, double r_l, double r_u);

struct SmoothSensParams {
  double epsilon = 1.0;  // > 0; no k-division, k enters the sensitivity bound
  std::size_t k = 1;     // entries of z one dataset record can move
  int d = 3;             // Student's T degrees of freedom
  double beta = 0.5;     // budget split between t and s
  double r_l = -0.5;
  double r_u = 1.5;
};

// Student's T noise scaled by the smooth sensitivity:
//   t = beta*eps/(d+1),  s = 2*sqrt(d)*(eps - t(d+1))/(d+1),
//   release median(z) + (S/s) * StudentsT(d).
// beta = 1/2 reproduces t = eps/(2(d+1)) and s = eps*sqrt(d)/(d+1).
double smooth_sens_median(std::span<const double> z, const SmoothSensParams& p,
                          RandomSeed seed);

}  // namespace dpslr
