#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace rbf {

// splitmix64 step (Vigna); used to derive independent seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Counter-based stream derivation: the seed of replication `index` under
// `base_seed` is splitmix64 applied to the pair, so any (seed, index)
// pair maps to the same stream on every run, thread count, and platform.
inline std::uint64_t derive_stream_seed(std::uint64_t base_seed, std::uint64_t index) {
  std::uint64_t state = base_seed;
  std::uint64_t a = splitmix64(state);
  state = a ^ index;
  return splitmix64(state);
}

// Deterministic random source. The engine is std::mt19937_64 (fully
// specified by the standard); all variate transforms are implemented
// here rather than with std::*_distribution, whose sequences are
// implementation-defined.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng for_replication(std::uint64_t base_seed, std::uint64_t rep_index) {
    return Rng(derive_stream_seed(base_seed, rep_index));
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

  // Uniform integer on [lo, hi] inclusive.
  int uniform_int(int lo, int hi) {
    const auto span = static_cast<double>(hi - lo + 1);
    int offset = static_cast<int>(uniform() * span);
    if (offset > hi - lo) offset = hi - lo;
    return lo + offset;
  }

  // Standard normal via Box-Muller; consumes exactly two uniforms.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    return radius * std::cos(2.0 * kPi * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Exponential with rate 1 by inversion.
  double exponential() { return -std::log(1.0 - uniform()); }

private:
  static constexpr double kPi = 3.141592653589793238462643383279502884;
  std::mt19937_64 engine_;
};

} // namespace rbf
