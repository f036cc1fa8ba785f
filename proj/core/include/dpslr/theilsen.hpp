#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dpslr/rng.hpp"
#include "dpslr/types.hpp"

namespace dpslr {

using IndexPair = std::pair<std::uint32_t, std::uint32_t>;

// Decomposition of the complete graph K_n into matchings: every unordered
// index pair appears in exactly one matching. Even n gives n-1 perfect
// matchings; odd n gives n near-perfect matchings of (n-1)/2 edges (one
// vertex sits out per matching).
struct MatchingSchedule {
  std::size_t n = 0;
  std::vector<std::vector<IndexPair>> matchings;
};

// Round-robin (circle method) 1-factorization.
MatchingSchedule matching_schedule(std::size_t n);

// Point-prediction estimates induced by matched pairs: for a pair (j,l) with
// x_l != x_j and slope s = (y_l - y_j)/(x_l - x_j),
//   z25 = s*(0.25 - (x_l+x_j)/2) + (y_l+y_j)/2,   z75 analogously.
// Pairs with equal x contribute nothing, so |z25| <= k * floor(n/2).
struct PairwiseEstimates {
  std::vector<double> z25;
  std::vector<double> z75;
  std::size_t k = 0;  // matchings used
  std::size_t n = 0;  // source dataset size
};

// Samples k matchings without replacement from the schedule (seeded) and
// emits the estimates of every matched non-vertical pair.
PairwiseEstimates pairwise_estimates(const Dataset& d,
                                     const MatchingSchedule& schedule,
                                     std::size_t k, RandomSeed seed);

// Median with the midpoint convention for even counts.
double median_midpoint(std::vector<double> values);

// (median(z25), median(z75)); throws NoValidPairs on empty estimates.
PredictionPair theilsen_fit(const PairwiseEstimates& estimates);

}  // namespace dpslr
