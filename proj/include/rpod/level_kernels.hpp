#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "rpod/covariance.hpp"
#include "rpod/detector.hpp"
#include "rpod/rng.hpp"

namespace rpod {

// Outcome of one simulated sequential test.
struct ReplicateOutcome {
  bool outlier = false;
  bool capped = false;  // hit the projection cap; no verdict
  std::size_t projections = 0;
};

struct LevelEstimate {
  std::size_t reps = 0;
  std::size_t rejections = 0;
  std::size_t capped = 0;
  double level = 0.0;              // rejections / decided replicates
  double mean_projections = 0.0;   // over decided replicates
  double var_projections = 0.0;    // unbiased sample variance
  std::vector<std::size_t> projection_counts;  // per replicate (capped ones hold the cap)
};

// Folds per-replicate outcomes in index order.
LevelEstimate summarize(const std::vector<ReplicateOutcome>& outcomes, bool keep_counts);

struct LevelOptions {
  int threads = 1;
  std::size_t cap = 0;          // 0 selects ceil(100 h)
  bool tolerate_cap = false;    // count capped replicates instead of throwing
  bool keep_counts = false;
};

// Reusable buffers for the isotropic kernels.
struct IsotropicWorkspace {
  std::vector<double> images;  // column j holds X f_j for the orthonormal frame f_j
  std::vector<double> proj;
  std::vector<double> scratch;
};

/// |standardized score| of a point at radius t against a fresh N_d(0, I)
/// sample of size n, along a fresh uniform direction. The projected sample
/// is exactly iid N(0, 1) and the point's projection is t times one
/// coordinate of a uniform unit vector, so the cost is O(n) for any d.
double isotropic_single_score(std::size_t n, std::size_t d, double t, Rng& rng, IsotropicWorkspace& ws);

/// One full sequential test for a point at radius t against a fresh
/// N_d(0, I) sample, simulated exactly without materializing the sample.
/// Directions are expressed in an orthonormal frame built incrementally
/// from the point direction and the directions drawn so far; the sample's
/// images along frame vectors are iid N(0, I_n) and are drawn lazily.
/// Projection k costs O(n * min(k, d)).
ReplicateOutcome isotropic_sequential_test(std::size_t n, std::size_t d, double t, double a, double b,
                                           std::size_t cap, Rng& rng, IsotropicWorkspace& ws);

/// Level and projection count of the sequential test with constants (a, b)
/// at radius t under Sigma = I, over `reps` replicates (replicate r uses the
/// stream derived from (seed, r)).
LevelEstimate estimate_level_isotropic(double a, double b, std::size_t n, std::size_t d, double t,
                                       std::size_t reps, std::uint64_t seed, const LevelOptions& options = {});

/// Same quantity for an arbitrary covariance family, with materialized
/// samples and classify_point. RandomGram covariances are redrawn per
/// replicate. `constants.n/d` define the design.
LevelEstimate estimate_level_covariance(const DetectorConstants& constants, const CovarianceSpec& spec, double t,
                                        std::size_t reps, std::uint64_t seed, const LevelOptions& options = {});

}  // namespace rpod
