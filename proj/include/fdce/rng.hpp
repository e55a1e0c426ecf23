#pragma once

// Seeded random streams. std::mt19937_64 has a standardized output sequence;
// the uniform/normal transforms below are written out by hand because the
// standard distributions are implementation-defined, and datasets must be
// bit-identical across standard libraries.

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>

namespace fdce {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Stream tags keep independent consumers of the same (seed, index) apart.
enum class Stream : std::uint64_t {
  Scene = 1,
  GainsUl = 2,
  GainsDl = 3,
  Gauss = 4,
  Noise = 5,
  Init = 6,
  Shuffle = 7,
  TrainNoise = 8,
  Test = 9,
  Grid = 10,
  TrainSnr = 11,
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Generator for (seed, stream, indices...), independent of how many other
  /// streams exist or in which order they are created.
  static Rng derive(std::uint64_t seed, Stream stream, std::initializer_list<std::uint64_t> indices = {}) {
    std::uint64_t h = splitmix64(seed ^ 0x5DEECE66DULL);
    h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
    for (std::uint64_t i : indices) h = splitmix64(h ^ (i + 0x632BE59BD9B4E019ULL));
    return Rng(h);
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Lemire-free rejection keeps it simple and unbiased.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % n;
  }

  /// Standard normal via Box-Muller (one draw per call, no cached spare).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
  std::complex<double> complex_normal(double variance = 1.0) {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-variance * std::log(u1));
    const double phi = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(phi), r * std::sin(phi)};
  }

  double exponential(double mean) {
    double u = uniform();
    while (u <= 0.0) u = uniform();
    return -mean * std::log(u);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace fdce
