#pragma once

// Portable random streams.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The distribution transforms are implemented here because the
// standard library's distributions are implementation-defined.
//
// Stream splitting: every consumer asks for a substream keyed by
// (seed, stream, index). The engine seed for that substream is
//   splitmix64(splitmix64(splitmix64(seed) ^ (stream * 0x9E3779B97F4A7C15)) ^ index)
// so substreams are independent of iteration order or thread scheduling.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>

namespace spolyak {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Well-known stream identifiers.
namespace streams {
inline constexpr std::uint64_t kDesign = 1;      // index = sample row
inline constexpr std::uint64_t kTruth = 2;       // index = 0
inline constexpr std::uint64_t kResponses = 3;   // index = sample row
inline constexpr std::uint64_t kConcavity = 4;   // index = trial
inline constexpr std::uint64_t kAssumption = 5;  // index = pair
}  // namespace streams

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t engine_seed) : engine_(engine_seed) {}

  static RandomStream substream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ (stream * 0x9E3779B97F4A7C15ULL));
    h = splitmix64(h ^ index);
    return RandomStream(h);
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Standard normal, Marsaglia polar method.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, q;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      q = u * u + v * v;
    } while (q >= 1.0 || q == 0.0);
    const double scale = std::sqrt(-2.0 * std::log(q) / q);
    spare_ = v * scale;
    has_spare_ = true;
    return u * scale;
  }

  // Uniform integer in [0, bound), unbiased (rejection on the top range).
  std::uint64_t below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

  bool coin() { return (engine_() >> 63) != 0; }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace spolyak
