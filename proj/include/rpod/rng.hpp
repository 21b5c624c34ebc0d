#pragma once

#include <cstdint>
#include <random>

namespace rpod {

// Seeded random stream. Every stochastic routine takes one explicitly; parallel
// code derives one stream per replicate from (master seed, replicate index) so
// results do not depend on the thread count.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Independent stream for replicate `stream` of a run seeded with `master`.
  static Rng derive(std::uint64_t master, std::uint64_t stream);

  double normal() { return normal_(engine_); }
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  // Chi-squared variate with `dof` degrees of freedom; dof == 0 yields 0.
  double chi_squared(double dof);
  std::uint64_t next_u64() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// SplitMix64 finalizer; used for seed derivation.
std::uint64_t mix64(std::uint64_t x);

}  // namespace rpod

namespace rpod {

// Seed for a named sub-computation of a run (bisection step, score batch...).
inline std::uint64_t sub_seed(std::uint64_t master, std::uint64_t tag) {
  return mix64(mix64(master) + 0x632BE59BD9B4E019ULL * (tag + 1));
}

}  // namespace rpod
