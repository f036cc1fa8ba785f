#include "dpslr/rng.hpp"

#include <cmath>
#include <numbers>

#include "dpslr/errors.hpp"

namespace dpslr {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  return splitmix64(x);
}

std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

}  // namespace

RandomSeed derive_stream(RandomSeed base, std::uint64_t salt) {
  return RandomSeed{base.seed, mix(base.stream_index, salt)};
}

RandomSeed derive_stream(RandomSeed base, std::string_view label) {
  // FNV-1a over the label, then mixed like an integer salt.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return derive_stream(base, h);
}

RngStream::RngStream(RandomSeed s) {
  std::uint64_t sm = mix(s.seed, s.stream_index);
  for (auto& word : state_) word = splitmix64(sm);
  // xoshiro must not start from the all-zero state.
  if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
}

std::uint64_t RngStream::next_u64() {
  std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

std::uint64_t RngStream::below(std::uint64_t bound) {
  if (bound == 0) throw InvalidValue("RngStream::below with bound 0");
  std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    std::uint64_t r = next_u64();
    if (r >= threshold) return r % bound;
  }
}

double RngStream::uniform01() {
  // 53 random bits shifted into (0,1): (r + 0.5) / 2^53.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
}

double RngStream::uniform(double lo, double hi) {
  if (!(hi > lo)) throw InvalidValue("uniform needs hi > lo");
  return lo + (hi - lo) * uniform01();
}

double RngStream::gaussian(double mu, double sigma) {
  if (sigma < 0 || std::isnan(sigma)) throw InvalidValue("gaussian needs sigma >= 0");
  if (sigma == 0) return mu;
  double u1 = uniform01();
  double u2 = uniform01();
  double r = std::sqrt(-2.0 * std::log(u1));
  return mu + sigma * r * std::cos(2.0 * std::numbers::pi * u2);
}

double RngStream::laplace(double location, double scale) {
  if (!(scale > 0)) throw InvalidValue("laplace needs scale > 0");
  double v = uniform01() - 0.5;
  double sign = v < 0 ? -1.0 : 1.0;
  return location - scale * sign * std::log1p(-2.0 * std::fabs(v));
}

double RngStream::gumbel() { return -std::log(-std::log(uniform01())); }

double RngStream::exponential(double scale) {
  if (!(scale > 0)) throw InvalidValue("exponential needs scale > 0");
  return -scale * std::log(uniform01());
}

double RngStream::gamma(double alpha) {
  // Marsaglia-Tsang squeeze; the alpha < 1 case boosts via U^(1/alpha).
  if (alpha < 1.0) {
    double u = uniform01();
    return gamma(alpha + 1.0) * std::pow(u, 1.0 / alpha);
  }
  double d = alpha - 1.0 / 3.0;
  double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = gaussian(0.0, 1.0);
    double v = 1.0 + c * x;
    if (v <= 0) continue;
    v = v * v * v;
    double u = uniform01();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
      return d * v;
    }
  }
}

double RngStream::students_t(int dof) {
  if (dof < 1) throw InvalidValue("students_t needs dof >= 1");
  double n = gaussian(0.0, 1.0);
  double chi2 = 2.0 * gamma(static_cast<double>(dof) / 2.0);
  return n / std::sqrt(chi2 / static_cast<double>(dof));
}

}  // namespace dpslr
