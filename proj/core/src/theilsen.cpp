#include "dpslr/theilsen.hpp"

#include <algorithm>
#include <string>

#include "dpslr/errors.hpp"

namespace dpslr {

MatchingSchedule matching_schedule(std::size_t n) {
  if (n < 2) throw TooFewPoints("matching_schedule needs n >= 2");
  MatchingSchedule sched;
  sched.n = n;
  if (n % 2 == 0) {
    // Circle method: vertices 0..n-2 rotate, vertex n-1 is the pivot.
    std::size_t m = n - 1;
    sched.matchings.resize(m);
    for (std::size_t h = 0; h < m; ++h) {
      auto& match = sched.matchings[h];
      match.reserve(n / 2);
      match.emplace_back(static_cast<std::uint32_t>(h),
                         static_cast<std::uint32_t>(n - 1));
      for (std::size_t j = 1; j <= (n - 2) / 2; ++j) {
        std::uint32_t a = static_cast<std::uint32_t>((h + j) % m);
        std::uint32_t b = static_cast<std::uint32_t>((h + m - j) % m);
        match.emplace_back(a, b);
      }
    }
  } else {
    // Near-1-factorization: in matching h vertex h sits out.
    sched.matchings.resize(n);
    for (std::size_t h = 0; h < n; ++h) {
      auto& match = sched.matchings[h];
      match.reserve((n - 1) / 2);
      for (std::size_t j = 1; j <= (n - 1) / 2; ++j) {
        std::uint32_t a = static_cast<std::uint32_t>((h + j) % n);
        std::uint32_t b = static_cast<std::uint32_t>((h + n - j) % n);
        match.emplace_back(a, b);
      }
    }
  }
  return sched;
}

PairwiseEstimates pairwise_estimates(const Dataset& d,
                                     const MatchingSchedule& schedule,
                                     std::size_t k, RandomSeed seed) {
  const std::size_t m = schedule.matchings.size();
  if (k < 1 || k > m) {
    throw InvalidValue("pairwise_estimates: k must be in [1, " +
                       std::to_string(m) + "]");
  }
  // Partial Fisher-Yates draw of k matching indices without replacement.
  RngStream rng(derive_stream(seed, "matching-sample"));
  std::vector<std::uint32_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = static_cast<std::uint32_t>(i);
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.below(m - i));
    std::swap(order[i], order[j]);
  }

  PairwiseEstimates est;
  est.k = k;
  est.n = d.size();
  est.z25.reserve(k * (d.size() / 2));
  est.z75.reserve(k * (d.size() / 2));
  for (std::size_t i = 0; i < k; ++i) {
    for (const auto& [j, l] : schedule.matchings[order[i]]) {
      const auto& pj = d[j];
      const auto& pl = d[l];
      if (pl.x - pj.x == 0.0) continue;  // vertical pair, no estimate
      double s = (pl.y - pj.y) / (pl.x - pj.x);
      double xm = (pl.x + pj.x) / 2.0;
      double ym = (pl.y + pj.y) / 2.0;
      est.z25.push_back(s * (0.25 - xm) + ym);
      est.z75.push_back(s * (0.75 - xm) + ym);
    }
  }
  return est;
}

double median_midpoint(std::vector<double> values) {
  if (values.empty()) throw EmptyInput("median of empty multiset");
  std::sort(values.begin(), values.end());
  std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

PredictionPair theilsen_fit(const PairwiseEstimates& estimates) {
  if (estimates.z25.empty() || estimates.z75.empty()) {
    throw NoValidPairs("theilsen_fit: no pairwise estimates (all x equal?)");
  }
  return PredictionPair{median_midpoint(estimates.z25),
                        median_midpoint(estimates.z75)};
}

}  // namespace dpslr
