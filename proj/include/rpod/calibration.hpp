#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "rpod/covariance.hpp"
#include "rpod/detector.hpp"
#include "rpod/level_kernels.hpp"
#include "rpod/rng.hpp"

namespace rpod {

struct CalibrationTarget {
  std::size_t n = 50;
  std::size_t d = 50;
  double alpha = 0.05;
  double delta = 0.05;
  double h = 50.0;                 // target mean projections at the calibration radius
  std::size_t mc_size = 100000;    // N, draws of the single-projection score
  std::size_t level_reps = 10000;  // sequential tests per bisection step
  double tol_level = 0.002;
  std::size_t max_iterations = 40;
  double min_bracket = 1e-4;
  std::optional<double> radius;    // defaults to C_n^d(delta)

  void validate() const;
  double calibration_radius() const;
  std::size_t projection_cap() const;
};

struct BisectionStep {
  double b_lo = 0.0;
  double b_hi = 0.0;
  double b = 0.0;
  double level = 0.0;
  double mean_projections = 0.0;
};

struct BisectionResult {
  double b = 0.0;
  LevelEstimate at_b;
  std::size_t iterations = 0;
  std::size_t expansions = 0;
  std::vector<BisectionStep> trace;
};

struct CalibrationResult {
  DetectorConstants constants;
  double radius = 0.0;
  double initial_b = 0.0;
  double estimated_level = 0.0;
  double estimated_mean_projections = 0.0;
  std::size_t bisection_iterations = 0;
  std::vector<BisectionStep> trace;
};

struct ProjectionMoments {
  double mean = 0.0;
  double variance = 0.0;
};

/// One draw of |score| for a point at radius t against a fresh N_d(0, I)
/// sample of size n along a fresh direction (exact reduced simulation).
double simulate_score(std::size_t n, std::size_t d, double t, Rng& rng);

/// `count` independent draws of simulate_score; draw j uses the stream
/// derived from (seed, j). Returned unsorted, in draw order.
std::vector<double> simulate_scores(std::size_t n, std::size_t d, double t, std::size_t count, std::uint64_t seed,
                                    int threads = 1);

/// Empirical p-quantile of ascending `sorted`, interpolating linearly
/// between order statistics at (1-based) position 1 + (m - 1) p.
double empirical_quantile(std::span<const double> sorted, double p);

/// Quantile levels (u, v) = ((1 - alpha) / h, 1 - alpha / h).
std::pair<double, double> initial_quantile_levels(double alpha, double h);

/// Initial (a, b): the u- and v-quantiles of the sorted score sample.
std::pair<double, double> initial_ab(std::span<const double> sorted_scores, double alpha, double h);

/// Rejection proportion of the full sequential test at radius t under
/// Sigma = I; see estimate_level_isotropic.
LevelEstimate estimate_level(double a, double b, std::size_t n, std::size_t d, double t, std::size_t reps,
                             std::uint64_t seed, const LevelOptions& options = {});

/// Bisection on b with a fixed so that the sequential test has level alpha
/// at the target radius. The bracket starts at [a, 2 b0] and its upper end
/// is expanded by 1.5x (at most 8 times) until the level there is <= alpha.
BisectionResult bisect_b(double a, double b0, const CalibrationTarget& target, std::uint64_t seed, int threads = 1);

/// Same bisection with levels estimated under a general covariance family
/// (materialized samples), keeping a fixed.
BisectionResult recalibrate_b(double a, double b0, const CalibrationTarget& target, const CovarianceSpec& spec,
                              std::uint64_t seed, int threads = 1);

/// threshold -> N score draws -> initial (a, b) -> bisection on b.
CalibrationResult calibrate(const CalibrationTarget& target, std::uint64_t seed, int threads = 1);

/// Mean and variance of the (geometric) number of projections when every
/// projection independently lands in the undecided band with probability
/// F_b - F_a.
ProjectionMoments expected_projections_identity(double f_a, double f_b);

/// Radius used to tune constants to a clean-sample false-flag rate: the
/// average over `draws` replicate samples of the 0.75-quantile of n draws
/// of sqrt(chi^2_d).
double tuning_radius(std::size_t n, std::size_t d, std::size_t draws, std::uint64_t seed);

/// (a, b) pairs for Sigma = I and delta = 0.05 computed with N = 10^6 score
/// draws, for n in {50, 100, 500}, d in {50, 100, 500, 1000}, h in {50, 100}.
std::optional<DetectorConstants> tabulated_constants(std::size_t n, std::size_t d, double h);

}  // namespace rpod
