#include "rpod/calibration.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "rpod/error.hpp"
#include "rpod/parallel.hpp"
#include "rpod/stats_core.hpp"

namespace rpod {

void CalibrationTarget::validate() const {
  if (n < 2 || d < 1) throw DomainError("calibration target needs n >= 2 and d >= 1");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in (0, 1]");
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
  if (!(h >= 1.0)) throw DomainError("target projections h must be >= 1");
  if (mc_size == 0 || level_reps == 0) throw DomainError("Monte Carlo sizes must be positive");
  if (!(tol_level >= 0.0)) throw DomainError("tol_level must be non-negative");
  if (radius && !(*radius > 0.0)) throw DomainError("calibration radius must be positive");
}

double CalibrationTarget::calibration_radius() const {
  return radius ? *radius : threshold_cnd(n, d, delta).c_nd;
}

std::size_t CalibrationTarget::projection_cap() const { return static_cast<std::size_t>(std::ceil(100.0 * h)); }

double simulate_score(std::size_t n, std::size_t d, double t, Rng& rng) {
  if (!(t >= 0.0)) throw DomainError("simulate_score: radius must be non-negative");
  IsotropicWorkspace ws;
  return isotropic_single_score(n, d, t, rng, ws);
}

std::vector<double> simulate_scores(std::size_t n, std::size_t d, double t, std::size_t count, std::uint64_t seed,
                                    int threads) {
  std::vector<double> out(count);
  for_each_replicate(count, threads, [&](std::size_t j) {
    thread_local IsotropicWorkspace ws;
    Rng rng = Rng::derive(seed, j);
    out[j] = isotropic_single_score(n, d, t, rng, ws);
  });
  return out;
}

double empirical_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw DomainError("empirical_quantile: empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("empirical_quantile: p outside [0, 1]");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::pair<double, double> initial_quantile_levels(double alpha, double h) {
  if (!(h >= 1.0)) throw DomainError("initial_ab: h must be >= 1");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("initial_ab: alpha must lie in (0, 1]");
  return {(1.0 - alpha) / h, 1.0 - alpha / h};
}

std::pair<double, double> initial_ab(std::span<const double> sorted_scores, double alpha, double h) {
  const auto [u, v] = initial_quantile_levels(alpha, h);
  return {empirical_quantile(sorted_scores, u), empirical_quantile(sorted_scores, v)};
}

LevelEstimate estimate_level(double a, double b, std::size_t n, std::size_t d, double t, std::size_t reps,
                             std::uint64_t seed, const LevelOptions& options) {
  return estimate_level_isotropic(a, b, n, d, t, reps, seed, options);
}

namespace {

template <class LevelFn>
BisectionResult run_bisection(double a, double b0, const CalibrationTarget& target, LevelFn&& level_at) {
  BisectionResult res;
  if (target.alpha >= 1.0) {
    // Level one is only reached with an empty undecided band.
    res.b = a;
    res.at_b = level_at(a, 0);
    return res;
  }
  const double alpha = target.alpha;
  std::uint64_t step = 1;

  double lo = a;
  const LevelEstimate at_lo = level_at(lo, step++);
  if (at_lo.level < alpha) {
    throw BracketFailure("bisect_b: level " + std::to_string(at_lo.level) + " at b = a is already below alpha");
  }
  double hi = std::max(2.0 * b0, 2.0 * a);
  LevelEstimate at_hi = level_at(hi, step++);
  while (at_hi.level > alpha) {
    if (res.expansions == 8) {
      throw BracketFailure("bisect_b: level still " + std::to_string(at_hi.level) + " at b = " +
                           std::to_string(hi) + " after 8 expansions");
    }
    lo = hi;
    hi *= 1.5;
    ++res.expansions;
    at_hi = level_at(hi, step++);
  }

  for (std::size_t it = 0; it < target.max_iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    LevelEstimate est = level_at(mid, step++);
    ++res.iterations;
    res.trace.push_back({lo, hi, mid, est.level, est.mean_projections});
    if (std::fabs(est.level - alpha) <= target.tol_level) {
      res.b = mid;
      res.at_b = std::move(est);
      return res;
    }
    if (est.level > alpha) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo < target.min_bracket) break;
  }
  res.b = 0.5 * (lo + hi);
  res.at_b = level_at(res.b, step++);
  return res;
}

}  // namespace

BisectionResult bisect_b(double a, double b0, const CalibrationTarget& target, std::uint64_t seed, int threads) {
  target.validate();
  if (!(a > 0.0)) throw DomainError("bisect_b: a must be positive");
  const double t = target.calibration_radius();
  LevelOptions opts;
  opts.threads = threads;
  opts.cap = target.projection_cap();
  return run_bisection(a, b0, target, [&](double b, std::uint64_t step) {
    return estimate_level_isotropic(a, b, target.n, target.d, t, target.level_reps, sub_seed(seed, step), opts);
  });
}

BisectionResult recalibrate_b(double a, double b0, const CalibrationTarget& target, const CovarianceSpec& spec,
                              std::uint64_t seed, int threads) {
  target.validate();
  if (!(a > 0.0)) throw DomainError("recalibrate_b: a must be positive");
  const double t = target.calibration_radius();
  LevelOptions opts;
  opts.threads = threads;
  opts.cap = target.projection_cap();
  opts.tolerate_cap = true;
  return run_bisection(a, b0, target, [&](double b, std::uint64_t step) {
    DetectorConstants c;
    c.a = a;
    c.b = b;
    c.n = target.n;
    c.d = target.d;
    c.alpha = target.alpha;
    c.delta = target.delta;
    c.h = target.h;
    return estimate_level_covariance(c, spec, t, target.level_reps, sub_seed(seed, step), opts);
  });
}

CalibrationResult calibrate(const CalibrationTarget& target, std::uint64_t seed, int threads) {
  target.validate();
  CalibrationResult out;
  out.radius = target.calibration_radius();

  std::vector<double> scores = simulate_scores(target.n, target.d, out.radius, target.mc_size, sub_seed(seed, 0), threads);
  std::sort(scores.begin(), scores.end());
  const auto [a, b0] = initial_ab(scores, target.alpha, target.h);
  out.initial_b = b0;

  BisectionResult bis = bisect_b(a, b0, target, sub_seed(seed, 1), threads);

  DetectorConstants& c = out.constants;
  c.a = a;
  c.b = bis.b;
  c.n = target.n;
  c.d = target.d;
  c.alpha = target.alpha;
  c.delta = target.delta;
  c.h = target.h;
  c.provenance.source = "calibrated";
  c.provenance.mc_size = target.mc_size;
  c.provenance.seed = seed;
  c.provenance.estimated_level = bis.at_b.level;
  c.provenance.estimated_mean_projections = bis.at_b.mean_projections;

  out.estimated_level = bis.at_b.level;
  out.estimated_mean_projections = bis.at_b.mean_projections;
  out.bisection_iterations = bis.iterations;
  out.trace = std::move(bis.trace);
  return out;
}

ProjectionMoments expected_projections_identity(double f_a, double f_b) {
  if (!(f_a >= 0.0 && f_a <= f_b && f_b <= 1.0)) {
    throw DomainError("expected_projections_identity: need 0 <= F_a <= F_b <= 1");
  }
  const double band = f_b - f_a;
  if (band >= 1.0) throw DomainError("expected_projections_identity: undecided band has probability one");
  const double stop = 1.0 - band;
  return {1.0 / stop, band / (stop * stop)};
}

double tuning_radius(std::size_t n, std::size_t d, std::size_t draws, std::uint64_t seed) {
  if (n == 0 || d == 0 || draws == 0) throw DomainError("tuning_radius: sizes must be positive");
  double total = 0.0;
  std::vector<double> sample(n);
  for (std::size_t r = 0; r < draws; ++r) {
    Rng rng = Rng::derive(seed, r);
    for (double& x : sample) x = std::sqrt(rng.chi_squared(static_cast<double>(d)));
    std::sort(sample.begin(), sample.end());
    total += empirical_quantile(sample, 0.75);
  }
  return total / static_cast<double>(draws);
}

namespace {

struct TabulatedRow {
  std::size_t n;
  std::size_t d;
  double a50, b50, a100, b100;
};

constexpr std::array<TabulatedRow, 12> kTabulated{{
    {50, 50, 0.0325, 4.9714, 0.0163, 5.3212},
    {50, 100, 0.0303, 4.7184, 0.0150, 5.0936},
    {50, 500, 0.0268, 4.3039, 0.0133, 4.6239},
    {50, 1000, 0.0263, 4.1916, 0.0130, 4.5217},
    {100, 50, 0.0326, 4.6374, 0.0163, 4.9143},
    {100, 100, 0.0303, 4.3539, 0.0151, 4.6495},
    {100, 500, 0.0267, 3.9230, 0.0133, 4.2078},
    {100, 1000, 0.0261, 3.8253, 0.0128, 4.0909},
    {500, 50, 0.0336, 4.4525, 0.0167, 4.6989},
    {500, 100, 0.0304, 4.1478, 0.0156, 4.3910},
    {500, 500, 0.0266, 3.7278, 0.0132, 3.9520},
    {500, 1000, 0.0259, 3.6096, 0.0130, 3.8197},
}};

}  // namespace

std::optional<DetectorConstants> tabulated_constants(std::size_t n, std::size_t d, double h) {
  if (h != 50.0 && h != 100.0) return std::nullopt;
  for (const auto& row : kTabulated) {
    if (row.n != n || row.d != d) continue;
    DetectorConstants c;
    c.a = h == 50.0 ? row.a50 : row.a100;
    c.b = h == 50.0 ? row.b50 : row.b100;
    c.n = n;
    c.d = d;
    c.alpha = 0.05;
    c.delta = 0.05;
    c.h = h;
    c.provenance.source = "tabulated";
    c.provenance.mc_size = 1000000;
    return c;
  }
  return std::nullopt;
}

}  // namespace rpod
