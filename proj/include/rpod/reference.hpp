#pragma once

// Straightforward serial implementations kept as references for the reduced
// and parallel kernels: they materialize the full n x d sample, draw the
// direction in R^d and go through the public detector API.

#include <cstddef>
#include <cstdint>

#include "rpod/detector.hpp"
#include "rpod/level_kernels.hpp"
#include "rpod/rng.hpp"

namespace rpod::reference {

/// |score| of a uniform point on the radius-t sphere against a fresh
/// N_d(0, I) sample of size n along one fresh direction.
double simulate_score_direct(std::size_t n, std::size_t d, double t, Rng& rng);

/// One sequential test on a materialized N_d(0, I) sample.
ReplicateOutcome sequential_test_direct(std::size_t n, std::size_t d, double t, double a, double b,
                                        std::size_t cap, Rng& rng);

/// Serial loop over sequential_test_direct; replicate r uses
/// Rng::derive(seed, r).
LevelEstimate estimate_level_direct(double a, double b, std::size_t n, std::size_t d, double t, std::size_t reps,
                                    std::uint64_t seed, std::size_t cap = 10000);

}  // namespace rpod::reference
