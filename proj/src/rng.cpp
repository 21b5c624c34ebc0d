#include "rpod/rng.hpp"

namespace rpod {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

Rng Rng::derive(std::uint64_t master, std::uint64_t stream) {
  return Rng(mix64(master) ^ mix64(stream * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
}

double Rng::chi_squared(double dof) {
  if (dof <= 0.0) return 0.0;
  return std::gamma_distribution<double>(0.5 * dof, 2.0)(engine_);
}

}  // namespace rpod
