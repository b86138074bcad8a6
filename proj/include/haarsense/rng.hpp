#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace haarsense {

/// SplitMix64 finalizer. Bijective on 64-bit integers.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Sub-stream seed for measurement `stream_id` of a run seeded with `seed`.
///
/// Every independent measurement in a protocol draws from its own stream, so
/// results are bitwise identical no matter how measurements are scheduled
/// across threads.
constexpr std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t stream_id) {
  return splitmix64(splitmix64(seed) ^ (0x9E3779B97F4A7C15ULL * (stream_id + 1)));
}

/// Seeded random stream with a portable Poisson sampler.
///
/// std::mt19937_64 output is fully specified by the standard; the Poisson
/// draw below uses only that stream plus elementary arithmetic, so counts
/// reproduce exactly across platforms and standard libraries (the
/// distribution classes in <random> do not guarantee that).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Exact Poisson draw by chunked multiplicative search.
  ///
  /// Splitting the mean into <= 500 chunks keeps exp(-chunk) well above
  /// double underflow while preserving the exact distribution (a sum of
  /// independent Poissons is Poisson). Cost is O(mean) uniforms.
  std::uint64_t poisson(double mean) {
    std::uint64_t total = 0;
    double remaining = mean;
    while (remaining > 0.0) {
      const double chunk = remaining > 500.0 ? 500.0 : remaining;
      remaining -= chunk;
      const double limit = std::exp(-chunk);
      double product = 1.0;
      std::uint64_t k = 0;
      do {
        ++k;
        product *= uniform();
      } while (product > limit);
      total += k - 1;
    }
    return total;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace haarsense
