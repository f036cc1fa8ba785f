#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace dpslr {

// Identifies one reproducible random stream. Identical (seed, stream_index)
// always yields the identical sample sequence, on every platform, which is
// what makes parallel Monte Carlo runs deterministic: each (dataset, trial,
// mechanism) derives its own stream instead of sharing a generator.
struct RandomSeed {
  std::uint64_t seed = 0;
  std::uint64_t stream_index = 0;
};

// Mixes a salt (counter or label hash) into the stream index.
RandomSeed derive_stream(RandomSeed base, std::uint64_t salt);
RandomSeed derive_stream(RandomSeed base, std::string_view label);

// xoshiro256++ seeded through SplitMix64 from (seed, stream_index).
// The standard <random> engines are portable but the standard distributions
// are not, so every draw below is an explicit transform of raw uniforms.
class RngStream {
 public:
  explicit RngStream(RandomSeed s);

  std::uint64_t next_u64();
  // Unbiased integer in [0, bound) by rejection.
  std::uint64_t below(std::uint64_t bound);

  // Uniform on the open interval (0,1); never 0, so log(u) is safe.
  double uniform01();
  double uniform(double lo, double hi);
  double gaussian(double mu, double sigma);
  // Inverse-CDF Laplace draw.
  double laplace(double location, double scale);
  // Standard Gumbel(0,1): -log(-log U).
  double gumbel();
  // Mean `scale` exponential: -scale * log U.
  double exponential(double scale);
  // Student's T with dof degrees of freedom, as N / sqrt(chi2(dof)/dof).
  double students_t(int dof);

 private:
  std::array<std::uint64_t, 4> state_;

  double gamma(double alpha);  // shape alpha, unit scale
};

}  // namespace dpslr
