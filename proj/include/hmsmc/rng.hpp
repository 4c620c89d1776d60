#pragma once

#include <cmath>
#include <cstdint>

namespace hmsmc {

// Named purposes for RNG streams.  Every random decision in the library is
// drawn from a stream keyed by (seed, purpose, a, b), so results do not
// depend on evaluation order or the number of worker threads.
namespace streams {
inline constexpr std::uint64_t prior_draw = 0x01;
inline constexpr std::uint64_t design = 0x02;
inline constexpr std::uint64_t train_sim = 0x03;
inline constexpr std::uint64_t resample = 0x04;
inline constexpr std::uint64_t mcmc_move = 0x05;
inline constexpr std::uint64_t kde_subset = 0x06;
inline constexpr std::uint64_t gp_restart = 0x07;
inline constexpr std::uint64_t pf_propagate = 0x08;
inline constexpr std::uint64_t pf_resample = 0x09;
inline constexpr std::uint64_t data_gen = 0x0a;
inline constexpr std::uint64_t oracle = 0x0b;
inline constexpr std::uint64_t baseline = 0x0c;
inline constexpr std::uint64_t test = 0xff;
}  // namespace streams

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// xoshiro256++ generator, one instance per logical stream.  Construction is
// cheap, so per-particle / per-point streams are created on demand.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t purpose, std::uint64_t a = 0,
            std::uint64_t b = 0) {
    std::uint64_t x = splitmix64(seed ^ 0x243f6a8885a308d3ULL);
    x = splitmix64(x ^ splitmix64(purpose));
    x = splitmix64(x ^ splitmix64(a));
    x = splitmix64(x ^ splitmix64(b));
    for (auto& w : state_) {
      x = splitmix64(x);
      w = x;
    }
    state_[0] |= 1;  // never all-zero
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0,1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0,1]; safe as a log() argument.
  double uniform_pos() { return 1.0 - uniform(); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

  // Box-Muller without the cached spare, to keep streams stateless between draws.
  double normal() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

  // Marsaglia-Tsang for shape >= 1, boosted for shape < 1.
  double gamma(double shape, double scale) {
    if (shape < 1.0) {
      const double u = uniform_pos();
      return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_pos();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t state_[4];
};

}  // namespace hmsmc
