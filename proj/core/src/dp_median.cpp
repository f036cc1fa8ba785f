#include "dpslr/dp_median.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "dpslr/errors.hpp"
#include "dpslr/theilsen.hpp"

namespace dpslr {

namespace {

void check_params(std::span<const double> z, const MedianMechParams& p) {
  if (z.empty()) throw EmptyInput("DP median: empty input");
  if (!(p.r_l < p.r_u)) throw InvalidRange("DP median: r_l must be < r_u");
  if (!(p.epsilon > 0)) throw InvalidValue("DP median: epsilon must be > 0");
}

std::vector<double> clipped_sorted(std::span<const double> z, double r_l,
                                   double r_u) {
  std::vector<double> v(z.begin(), z.end());
  for (double& x : v) x = std::clamp(x, r_l, r_u);
  std::sort(v.begin(), v.end());
  return v;
}

// Interval sampler shared by the plain and widened mechanisms. `v` is the
// sorted, clipped candidate array without the range endpoints.
double sample_interval(std::vector<double> v, const MedianMechParams& p,
                       RngStream& rng) {
  v.insert(v.begin(), p.r_l);
  v.push_back(p.r_u);
  const std::size_t n = v.size();
  const double half = static_cast<double>(n) / 2.0;

  double max_noisy = -std::numeric_limits<double>::infinity();
  std::size_t argmax = 0;
  for (std::size_t i = 1; i < n; ++i) {
    double length = v[i] - v[i - 1];
    if (!(length > 0)) continue;  // score -inf, never selected
    double dist = std::ceil(std::fabs(static_cast<double>(i) - half));
    double score = std::log(length) - (p.epsilon / 2.0) * dist;
    double noisy = score + rng.gumbel();
    if (noisy > max_noisy) {
      max_noisy = noisy;
      argmax = i;
    }
  }
  if (argmax == 0) {
    throw InvalidRange("DP median: no interval with positive length");
  }
  return rng.uniform(v[argmax - 1], v[argmax]);
}

}  // namespace

double exp_mech_median(std::span<const double> z, const MedianMechParams& p,
                       RandomSeed seed) {
  check_params(z, p);
  RngStream rng(seed);
  return sample_interval(clipped_sorted(z, p.r_l, p.r_u), p, rng);
}

double widened_exp_mech_median(std::span<const double> z,
                               const MedianMechParams& p, RandomSeed seed) {
  check_params(z, p);
  if (p.theta < 0) throw InvalidValue("widened mechanism: theta must be >= 0");
  std::vector<double> v = clipped_sorted(z, p.r_l, p.r_u);
  if (v.size() % 2 == 0) {
    // Insert the true median so an exact middle element exists.
    double med = (v[v.size() / 2 - 1] + v[v.size() / 2]) / 2.0;
    v.insert(v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), med);
  }
  const std::size_t n = v.size();
  for (std::size_t i = 0; i <= n / 2; ++i) {
    v[i] = std::max(p.r_l, v[i] - p.theta);
    v[n - i - 1] = std::min(p.r_u, v[n - i - 1] + p.theta);
  }
  // The shifts preserve sortedness except possibly at the middle element,
  // which receives both (down, then up).
  std::sort(v.begin(), v.end());
  RngStream rng(seed);
  return sample_interval(std::move(v), p, rng);
}

double smooth_sensitivity(std::span<const double> sorted_z, std::size_t k,
                          double t, double r_l, double r_u) {
  if (sorted_z.empty()) throw EmptyInput("smooth_sensitivity: empty input");
  if (!(t > 0)) throw InvalidValue("smooth_sensitivity: t must be > 0");
  if (k < 1) throw InvalidValue("smooth_sensitivity: k must be >= 1");
  if (!(r_l < r_u)) throw InvalidRange("smooth_sensitivity: r_l must be < r_u");

  const long n = static_cast<long>(sorted_z.size());
  // 1-based order statistics; indices off either end resolve to the range
  // endpoints, the extreme values a clipped estimate can reach.
  auto at = [&](long i) -> double {
    if (i < 1) return r_l;
    if (i > n) return r_u;
    return sorted_z[static_cast<std::size_t>(i - 1)];
  };
  const long m = (n % 2 == 0) ? n / 2 : (n + 1) / 2;
  const long kk = static_cast<long>(k);

  double best = 0.0;
  for (long l = 0;; ++l) {
    long width = kk * (l + 1);
    double window = 0.0;
    for (long s = 0; s <= width; ++s) {
      window = std::max(window, at(m + s) - at(m - width + s));
    }
    best = std::max(best, std::exp(-t * static_cast<double>(l)) * window);
    // Once some shift has both window ends padded the window equals the full
    // range r_u - r_l, and every later term is a strictly smaller multiple
    // of it. For k = 1 this stops at l = n.
    if (width >= n + 1) break;
  }
  return best;
}

double smooth_sens_median(std::span<const double> z, const SmoothSensParams& p,
                          RandomSeed seed) {
  if (z.empty()) throw EmptyInput("smooth_sens_median: empty input");
  if (!(p.epsilon > 0)) throw InvalidValue("smooth_sens_median: epsilon <= 0");
  if (p.d < 1) throw InvalidValue("smooth_sens_median: d must be >= 1");
  if (!(p.beta > 0) || !(p.beta < 1)) {
    throw InvalidValue("smooth_sens_median: beta must be in (0,1)");
  }
  const double dd = static_cast<double>(p.d);
  const double t = p.beta * p.epsilon / (dd + 1.0);
  const double s = 2.0 * std::sqrt(dd) * (p.epsilon - t * (dd + 1.0)) / (dd + 1.0);

  std::vector<double> v(z.begin(), z.end());
  for (double& x : v) x = std::clamp(x, p.r_l, p.r_u);
  std::sort(v.begin(), v.end());
  double sens = smooth_sensitivity(v, p.k, t, p.r_l, p.r_u);
  double med = v.size() % 2 == 1 ? v[v.size() / 2]
                                 : (v[v.size() / 2 - 1] + v[v.size() / 2]) / 2.0;
  double noise = RngStream(seed).students_t(p.d);
  return std::clamp(med + (sens / s) * noise, p.r_l, p.r_u);
}

}  // namespace dpslr
