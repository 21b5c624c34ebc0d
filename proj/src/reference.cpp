#include "rpod/reference.hpp"

#include <cmath>
#include <vector>

#include "rpod/covariance.hpp"
#include "rpod/error.hpp"

namespace rpod::reference {
namespace {

DataMatrix standard_sample(std::size_t n, std::size_t d, Rng& rng) {
  std::vector<double> values(n * d);
  for (double& x : values) x = rng.normal();
  return DataMatrix(n, d, std::move(values));
}

std::vector<double> sphere_point(std::size_t d, double t, Rng& rng) {
  const Direction u = sample_unit_direction(rng, d);
  std::vector<double> x(u.components().begin(), u.components().end());
  for (double& v : x) v *= t;
  return x;
}

}  // namespace

double simulate_score_direct(std::size_t n, std::size_t d, double t, Rng& rng) {
  const DataMatrix sample = standard_sample(n, d, rng);
  const std::vector<double> x = sphere_point(d, t, rng);
  for (int attempt = 0; attempt < 32; ++attempt) {
    try {
      return std::fabs(project_scores(sample, x, sample_unit_direction(rng, d)).score);
    } catch (const DegenerateProjection&) {
    }
  }
  throw DegenerateData("simulate_score_direct: repeated zero MADN");
}

ReplicateOutcome sequential_test_direct(std::size_t n, std::size_t d, double t, double a, double b,
                                        std::size_t cap, Rng& rng) {
  const DataMatrix sample = standard_sample(n, d, rng);
  const std::vector<double> x = sphere_point(d, t, rng);
  DetectorConstants c;
  c.a = a;
  c.b = b;
  c.n = n;
  c.d = d;
  ClassifyOptions opts;
  opts.cap = cap;
  ReplicateOutcome out;
  try {
    const Decision dec = classify_point(x, sample, c, rng, opts);
    out.outlier = dec.verdict == Verdict::Outlier;
    out.projections = dec.projections_used;
  } catch (const CapExceeded&) {
    out.capped = true;
    out.projections = cap;
  }
  return out;
}

LevelEstimate estimate_level_direct(double a, double b, std::size_t n, std::size_t d, double t, std::size_t reps,
                                    std::uint64_t seed, std::size_t cap) {
  std::vector<ReplicateOutcome> outcomes(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    Rng rng = Rng::derive(seed, r);
    outcomes[r] = sequential_test_direct(n, d, t, a, b, cap, rng);
  }
  return summarize(outcomes, true);
}

}  // namespace rpod::reference
