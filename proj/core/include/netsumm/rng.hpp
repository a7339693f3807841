#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace netsumm {

/// Seeded generator with platform-independent draws.
///
/// std::uniform_*_distribution output is implementation-defined, so the
/// helpers below map raw 64-bit engine output to ranges themselves. That
/// keeps training runs and layouts bit-reproducible across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  std::uint64_t seed() const { return seed_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
};

/// Child seed for a named sub-stream, e.g. a recursion branch path.
std::uint64_t derive_seed(std::uint64_t root, std::string_view path);

}  // namespace netsumm
