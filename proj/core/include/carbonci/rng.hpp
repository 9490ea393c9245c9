#pragma once

#include <cstdint>
#include <random>

namespace carbonci {

/// mt19937_64 with hand-derived distributions. The engine's output sequence is
/// pinned by the standard, so seeded results are reproducible across standard
/// library implementations (std::*_distribution would not be).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [lo, hi], inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(next_u64() % span);
  }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) {
    const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
  }

  bool chance(double p) { return uniform(0.0, 1.0) < p; }

  /// Standard normal via Box-Muller.
  double normal(double mean, double stddev);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace carbonci
