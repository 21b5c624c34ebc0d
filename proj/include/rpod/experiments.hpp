#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rpod/covariance.hpp"
#include "rpod/detector.hpp"

namespace rpod {

enum class ExperimentKind { Level, Contamination, CleanSample };

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& name);

struct ExperimentScenario {
  ExperimentKind kind = ExperimentKind::Level;
  std::size_t n = 0;
  std::size_t d = 0;
  CovarianceSpec covariance;
  std::vector<double> radii;  // multipliers of C_n^d; one entry for level runs
  std::size_t reps = 0;
  DetectorConstants constants;
  std::string constants_id;
  std::uint64_t seed = 0;
};

struct RadiusBreakdown {
  double radius = 0.0;
  std::size_t planted = 0;   // total over successful replicates
  std::size_t detected = 0;
  double proportion = 0.0;
};

struct ExperimentReport {
  ExperimentScenario scenario;
  std::string engine;              // "isotropic" or "direct"
  std::size_t completed = 0;       // replicates that produced a result
  std::size_t failed = 0;          // replicates aborted (degenerate data, scan cap)
  std::size_t capped = 0;          // level runs: tests that hit the projection cap
  double rejection_proportion = 0.0;
  double mean_projections = 0.0;
  std::vector<RadiusBreakdown> per_radius;
  std::size_t clean_points = 0;
  std::size_t clean_flagged = 0;
  double swamping_proportion = 0.0;  // clean points flagged / clean points
};

struct ExperimentOptions {
  int threads = 1;
  bool force_direct = false;            // never use the reduced isotropic kernel
  std::size_t cap = 0;                  // projection cap, 0 = ceil(100 h)
  double contamination_fraction = 0.1;
};

/// Planted-outlier counts per radius: round(fraction * n) points spread as
/// evenly as possible, earlier radii taking the remainder.
std::vector<std::size_t> planted_counts(std::size_t n, std::size_t radius_count, double fraction);

/// Rejection proportion and mean projection count of the sequential test for
/// a point at Mahalanobis radius r * C_n^d against fresh N_d(0, Sigma)
/// samples. Tests that exceed the projection cap are reported as `capped`
/// and excluded from both statistics.
ExperimentReport run_level_experiment(std::size_t n, std::size_t d, const CovarianceSpec& spec, double r,
                                      const DetectorConstants& constants, std::size_t reps, std::uint64_t seed,
                                      const ExperimentOptions& options = {});

/// Masking/swamping run: each replicate scans a sample of (n - planted) clean
/// points plus planted points at r * C_n^d for each r in `radii`, and
/// tallies detections per radius and false flags among clean points.
ExperimentReport run_contamination_experiment(std::size_t n, std::size_t d, const CovarianceSpec& spec,
                                              const std::vector<double>& radii, const DetectorConstants& constants,
                                              std::size_t reps, std::uint64_t seed,
                                              const ExperimentOptions& options = {});

/// Mean fraction of points flagged by analyse_sample on clean samples.
ExperimentReport run_clean_sample_experiment(std::size_t n, std::size_t d, const CovarianceSpec& spec,
                                             const DetectorConstants& constants, std::size_t reps,
                                             std::uint64_t seed, const ExperimentOptions& options = {});

// ---- preset grids -------------------------------------------------------

enum class Scale { Desk, Full };

Scale scale_from_string(const std::string& name);
std::string to_string(Scale scale);

// One cell of a preset grid; constants are resolved by the caller.
struct PresetCell {
  ExperimentKind kind = ExperimentKind::Level;
  std::size_t n = 0;
  std::size_t d = 0;
  CovarianceKind covariance = CovarianceKind::Identity;
  std::vector<double> radii;
  double h = 50.0;
  double alpha = 0.05;
  bool tuned = false;  // constants tuned to a 10% clean-sample flag rate
  std::size_t reps = 0;
};

/// Grids behind the reproducible tables: "5" (level at C_n^d), "6" (power at
/// 1.2 and 2 C_n^d), "7" (clean samples, tuned constants) and "masking".
/// Throws InputError for unknown names.
std::vector<PresetCell> preset_cells(const std::string& name, Scale scale);

// Aligned plain-text rendering of a list of reports of one kind.
std::string render_table(const std::vector<ExperimentReport>& reports);

}  // namespace rpod
