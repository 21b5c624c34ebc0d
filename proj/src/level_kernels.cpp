#include "rpod/level_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rpod/error.hpp"
#include "rpod/parallel.hpp"
#include "rpod/stats_core.hpp"

namespace rpod {

LevelEstimate summarize(const std::vector<ReplicateOutcome>& outcomes, bool keep_counts) {
  LevelEstimate est;
  est.reps = outcomes.size();
  double sum = 0.0;
  double sum2 = 0.0;
  for (const auto& o : outcomes) {
    if (keep_counts) est.projection_counts.push_back(o.projections);
    if (o.capped) {
      ++est.capped;
      continue;
    }
    if (o.outlier) ++est.rejections;
    const double k = static_cast<double>(o.projections);
    sum += k;
    sum2 += k * k;
  }
  const std::size_t decided = est.reps - est.capped;
  if (decided > 0) {
    const double m = static_cast<double>(decided);
    est.level = static_cast<double>(est.rejections) / m;
    est.mean_projections = sum / m;
    if (decided > 1) est.var_projections = std::max(0.0, (sum2 - sum * sum / m) / (m - 1.0));
  }
  return est;
}

namespace {

void fill_normals(Rng& rng, double* out, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) out[i] = rng.normal();
}

constexpr int kMaxDegenerate = 32;

}  // namespace

double isotropic_single_score(std::size_t n, std::size_t d, double t, Rng& rng, IsotropicWorkspace& ws) {
  if (n < 2 || d < 1) throw DomainError("isotropic_single_score: need n >= 2, d >= 1");
  ws.proj.resize(n);
  ws.scratch.resize(n);
  for (int attempt = 0; attempt < kMaxDegenerate; ++attempt) {
    // Coordinate of a uniform unit vector along the point direction.
    const double g0 = rng.normal();
    const double rest = rng.chi_squared(static_cast<double>(d - 1));
    const double c0 = g0 / std::sqrt(g0 * g0 + rest);
    fill_normals(rng, ws.proj.data(), n);
    const RobustLocationScale rls = robust_location_scale_inplace(ws.proj, ws.scratch);
    if (rls.madn > 0.0) return std::fabs(t * c0 - rls.median) / rls.madn;
  }
  throw DegenerateData("isotropic_single_score: repeated zero MADN");
}

ReplicateOutcome isotropic_sequential_test(std::size_t n, std::size_t d, double t, double a, double b,
                                           std::size_t cap, Rng& rng, IsotropicWorkspace& ws) {
  if (n < 2 || d < 1) throw DomainError("isotropic_sequential_test: need n >= 2, d >= 1");
  ws.proj.resize(n);
  ws.scratch.resize(n);
  ws.images.resize(n);
  // Frame vector 0 is the point direction; the point is t f_0.
  fill_normals(rng, ws.images.data(), n);
  std::size_t frame = 1;
  std::vector<double> g;
  g.reserve(std::min<std::size_t>(d, 256));

  ReplicateOutcome out;
  int degenerate = 0;
  for (;;) {
    // New direction g / ||g|| in the frame: one Gaussian coefficient per
    // existing frame vector, and (while the frame does not span R^d) a
    // component along a fresh orthogonal vector whose squared length is
    // chi^2_{d - frame}.
    g.resize(frame);
    for (double& x : g) x = rng.normal();
    double fresh = 0.0;
    if (frame < d) fresh = std::sqrt(rng.chi_squared(static_cast<double>(d - frame)));

    double* y = ws.proj.data();
    const double* col = ws.images.data();
    {
      const double g0 = g[0];
      for (std::size_t i = 0; i < n; ++i) y[i] = g0 * col[i];
    }
    for (std::size_t j = 1; j < frame; ++j) {
      const double gj = g[j];
      const double* cj = col + j * n;
      for (std::size_t i = 0; i < n; ++i) y[i] += gj * cj[i];
    }
    if (frame < d) {
      ws.images.resize((frame + 1) * n);
      double* cnew = ws.images.data() + frame * n;
      fill_normals(rng, cnew, n);
      y = ws.proj.data();
      for (std::size_t i = 0; i < n; ++i) y[i] += fresh * cnew[i];
      ++frame;
    }

    // The common factor 1 / ||g|| cancels in the standardized score.
    const double point_proj = t * g[0];
    const RobustLocationScale rls = robust_location_scale_inplace(ws.proj, ws.scratch);
    if (!(rls.madn > 0.0)) {
      if (++degenerate >= kMaxDegenerate) throw DegenerateData("isotropic_sequential_test: repeated zero MADN");
      continue;
    }
    degenerate = 0;
    ++out.projections;
    const double score = std::fabs(point_proj - rls.median) / rls.madn;
    if (score < a) return out;
    if (score > b) {
      out.outlier = true;
      return out;
    }
    if (out.projections >= cap) {
      out.capped = true;
      return out;
    }
  }
}

namespace {

std::size_t resolve_cap(std::size_t cap, double h) {
  return cap > 0 ? cap : static_cast<std::size_t>(std::ceil(100.0 * h));
}

void check_capped(const ReplicateOutcome& o, const LevelOptions& options, std::size_t cap) {
  if (o.capped && !options.tolerate_cap) {
    throw CapExceeded("sequential test undecided after " + std::to_string(cap) + " projections");
  }
}

}  // namespace

LevelEstimate estimate_level_isotropic(double a, double b, std::size_t n, std::size_t d, double t,
                                       std::size_t reps, std::uint64_t seed, const LevelOptions& options) {
  if (!(a > 0.0) || !(b >= a)) throw DomainError("estimate_level: need 0 < a <= b");
  if (reps == 0) throw DomainError("estimate_level: reps must be positive");
  if (!(t > 0.0)) throw DomainError("estimate_level: radius must be positive");
  // Without an explicit cap the budget scales with the expected count at the
  // level point, which the caller encodes in h; default to a generous 10^4.
  const std::size_t cap = options.cap > 0 ? options.cap : 10000;
  std::vector<ReplicateOutcome> outcomes(reps);
  for_each_replicate(reps, options.threads, [&](std::size_t r) {
    thread_local IsotropicWorkspace ws;
    Rng rng = Rng::derive(seed, r);
    outcomes[r] = isotropic_sequential_test(n, d, t, a, b, cap, rng, ws);
    check_capped(outcomes[r], options, cap);
  });
  return summarize(outcomes, options.keep_counts);
}

LevelEstimate estimate_level_covariance(const DetectorConstants& constants, const CovarianceSpec& spec, double t,
                                        std::size_t reps, std::uint64_t seed, const LevelOptions& options) {
  constants.validate();
  if (reps == 0) throw DomainError("estimate_level: reps must be positive");
  if (spec.d != constants.d) throw DomainError("estimate_level: covariance dimension differs from constants");
  const std::size_t cap = resolve_cap(options.cap, constants.h);
  const bool per_replicate = spec.kind == CovarianceKind::RandomGram;
  std::optional<CovarianceModel> fixed;
  if (!per_replicate) fixed = build_covariance(spec);

  std::vector<ReplicateOutcome> outcomes(reps);
  for_each_replicate(reps, options.threads, [&](std::size_t r) {
    Rng rng = Rng::derive(seed, r);
    std::optional<CovarianceModel> own;
    if (per_replicate) own = build_covariance(spec, rng);
    const CovarianceModel& model = per_replicate ? *own : *fixed;
    const DataMatrix sample = sample_gaussian(constants.n, model, rng);
    const std::vector<double> point = sample_on_mahalanobis_sphere(model, t, rng);
    ClassifyOptions copts;
    copts.cap = cap;
    ReplicateOutcome o;
    try {
      const Decision dec = classify_point(point, sample, constants, rng, copts);
      o.outlier = dec.verdict == Verdict::Outlier;
      o.projections = dec.projections_used;
    } catch (const CapExceeded&) {
      if (!options.tolerate_cap) throw;
      o.capped = true;
      o.projections = cap;
    }
    outcomes[r] = o;
  });
  return summarize(outcomes, options.keep_counts);
}

}  // namespace rpod
