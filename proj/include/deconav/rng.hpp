#pragma once

#include <cstdint>
#include <string_view>

namespace deconav {

/// Deterministic 64-bit generator (splitmix64). Used instead of <random>
/// engines so that streams are reproducible across compilers and platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t next_below(std::uint64_t n);

  /// Uniform double in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  /// Uniform integer in [lo, hi] inclusive.
  int uniform_int(int lo, int hi);

  /// Standard normal via Box-Muller. One draw per call, no cached spare.
  double normal();

 private:
  std::uint64_t state_;
};

/// Derives an independent child seed from a base seed, a component tag and an
/// index. Same inputs always give the same child stream.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                          std::uint64_t index = 0);

/// FNV-1a over a byte string; used for config fingerprints and checksums.
std::uint64_t fnv1a(std::string_view bytes);

}  // namespace deconav
