#pragma once

#include <cstdint>
#include <random>

namespace tfn {

/// Seeded source for every randomised battery. Uses the raw 64-bit engine
/// output so that streams are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform on {0, ..., n-1}.
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }

  std::uint64_t next() { return engine_(); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace tfn
