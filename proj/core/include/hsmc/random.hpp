#ifndef HSMC_RANDOM_HPP
#define HSMC_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace hsmc {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Mixes a (seed, stream, substream) triple into one 64-bit engine key.
inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ (b * 0xd6e8feb86659fd93ULL + 1));
}

/// One deterministic random stream. Sampling algorithms are spelled out here
/// (instead of std::*_distribution) so draws are identical across standard
/// library implementations.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key) : engine_(key) {}

  /// Uniform on [0,1), 53-bit resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (two uniforms per draw, no cached state).
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    return r * std::cos(2.0 * M_PI * u2);
  }

  /// Uniform integer on [0, n), n >= 1.
  std::uint64_t uniform_int(std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<__uint128_t>(engine_()) * n) >> 64);
  }

  /// Poisson by Knuth's product method; fine for small means.
  int poisson(double mean) {
    const double limit = std::exp(-mean);
    int k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform();
    } while (p > limit);
    return k - 1;
  }

  /// Gamma with shape 2 (sum of two exponentials).
  double gamma_shape2(double scale) {
    const double e1 = -std::log1p(-uniform());
    const double e2 = -std::log1p(-uniform());
    return scale * (e1 + e2);
  }

 private:
  std::mt19937_64 engine_;
};

/// Per-particle stream for one iteration; independent of thread interleaving.
inline RngStream particle_stream(std::uint64_t seed, std::size_t particle, std::uint64_t iteration) {
  return RngStream(stream_key(seed, particle + 1, iteration));
}

/// Population-level stream (resampling draw and similar whole-ensemble decisions).
inline RngStream population_stream(std::uint64_t seed, std::uint64_t iteration) {
  return RngStream(stream_key(seed, 0, iteration));
}

}  // namespace hsmc

#endif
