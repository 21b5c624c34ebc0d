#include "rpod/detector.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rpod/error.hpp"
#include "rpod/parallel.hpp"
#include "rpod/special_functions.hpp"

namespace rpod {

void DetectorConstants::validate() const {
  if (!(a > 0.0) || !(b >= a) || !std::isfinite(a)) {
    throw DomainError("detector constants must satisfy 0 < a <= b");
  }
  if (!(h >= 1.0)) throw DomainError("target projections h must be >= 1");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in (0, 1]");
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
}

std::size_t DetectorConstants::default_cap() const {
  return static_cast<std::size_t>(std::ceil(100.0 * h));
}

std::string to_string(Verdict v) { return v == Verdict::Outlier ? "outlier" : "regular"; }

std::string to_string(VoteMode mode) {
  switch (mode) {
    case VoteMode::Proportional: return "proportional";
    case VoteMode::Strengthened: return "strengthened";
    case VoteMode::Relaxed: return "relaxed";
  }
  return "unknown";
}

VoteMode vote_mode_from_string(const std::string& name) {
  if (name == "proportional") return VoteMode::Proportional;
  if (name == "strengthened") return VoteMode::Strengthened;
  if (name == "relaxed") return VoteMode::Relaxed;
  throw InputError("unknown vote mode '" + name + "'");
}

namespace {

void check_design(const DataMatrix& sample, const DetectorConstants& c) {
  if (sample.rows() != c.n || sample.cols() != c.d) {
    throw DomainError("sample is " + std::to_string(sample.rows()) + "x" + std::to_string(sample.cols()) +
                      " but constants were calibrated for n=" + std::to_string(c.n) +
                      ", d=" + std::to_string(c.d));
  }
}

}  // namespace

Decision classify_point(std::span<const double> point, const DataMatrix& sample,
                        const DetectorConstants& constants, Rng& rng, const ClassifyOptions& options) {
  constants.validate();
  if (point.size() != sample.cols()) throw DomainError("classify_point: point dimension mismatch");
  if (sample.rows() < 2) throw DomainError("classify_point: sample needs at least two rows");
  if (options.check_design) check_design(sample, constants);
  const std::size_t cap = options.cap > 0 ? options.cap : constants.default_cap();

  const std::size_t n = sample.rows();
  std::vector<double> proj(n);
  std::vector<double> scratch(n);
  std::size_t used = 0;
  int degenerate = 0;
  for (;;) {
    const Direction v = sample_unit_direction(rng, sample.cols());
    project_rows(sample, v.components(), proj);
    const RobustLocationScale rls = robust_location_scale_inplace(proj, scratch);
    if (!(rls.madn > 0.0)) {
      if (++degenerate >= options.max_degenerate_retries) {
        throw DegenerateData("classify_point: " + std::to_string(degenerate) +
                             " consecutive projections with zero MADN");
      }
      continue;
    }
    degenerate = 0;
    ++used;
    const double score = std::fabs(dot(point, v.components()) - rls.median) / rls.madn;
    if (score < constants.a) return {Verdict::Regular, used, score};
    if (score > constants.b) return {Verdict::Outlier, used, score};
    if (used >= cap) {
      throw CapExceeded("classify_point: no decision after " + std::to_string(cap) + " projections");
    }
  }
}

AnalysisResult analyse_sample(const DataMatrix& sample, const DetectorConstants& constants, Rng& rng,
                              const AnalysisOptions& options) {
  constants.validate();
  if (sample.rows() < 3) throw DomainError("analyse_sample: sample needs at least three rows");
  if (options.check_design) check_design(sample, constants);

  const std::size_t n = sample.rows();
  const std::size_t d = sample.cols();
  std::vector<std::size_t> retained(n);
  std::iota(retained.begin(), retained.end(), 0);
  std::vector<char> regular(n, 0);
  std::size_t regular_count = 0;

  std::vector<double> proj(n), work(n), scratch(n), scores(n);
  AnalysisResult result;
  int degenerate = 0;

  while (retained.size() >= 3 && regular_count < retained.size()) {
    if (result.rounds >= options.round_cap) {
      throw CapExceeded("analyse_sample: no fixed point after " + std::to_string(options.round_cap) + " rounds");
    }
    const std::size_t m = retained.size();
    const Direction v = sample_unit_direction(rng, d);
    for (std::size_t k = 0; k < m; ++k) proj[k] = dot(sample.row(retained[k]), v.components());

    bool degenerate_round = false;
    if (!options.leave_one_out) {
      std::copy(proj.begin(), proj.begin() + static_cast<std::ptrdiff_t>(m), work.begin());
      const RobustLocationScale rls =
          robust_location_scale_inplace(std::span<double>(work.data(), m), std::span<double>(scratch.data(), m));
      if (!(rls.madn > 0.0)) {
        degenerate_round = true;
      } else {
        for (std::size_t k = 0; k < m; ++k) scores[k] = std::fabs(proj[k] - rls.median) / rls.madn;
      }
    } else {
      for (std::size_t k = 0; k < m && !degenerate_round; ++k) {
        std::size_t w = 0;
        for (std::size_t j = 0; j < m; ++j) {
          if (j != k) work[w++] = proj[j];
        }
        const RobustLocationScale rls = robust_location_scale_inplace(std::span<double>(work.data(), w),
                                                                      std::span<double>(scratch.data(), w));
        if (!(rls.madn > 0.0)) {
          degenerate_round = true;
        } else {
          scores[k] = std::fabs(proj[k] - rls.median) / rls.madn;
        }
      }
    }
    if (degenerate_round) {
      if (++degenerate >= options.max_degenerate_retries) {
        throw DegenerateData("analyse_sample: " + std::to_string(degenerate) +
                             " consecutive projections with zero MADN");
      }
      continue;
    }
    degenerate = 0;
    ++result.rounds;

    // Regular points are settled until the next reset unless retest_regular is set.
    auto flagged = [&](std::size_t k) {
      return scores[k] > constants.b && (options.retest_regular || !regular[retained[k]]);
    };
    bool any_outlier = false;
    for (std::size_t k = 0; k < m; ++k) any_outlier = any_outlier || flagged(k);

    if (any_outlier) {
      std::vector<std::size_t> kept;
      kept.reserve(m);
      for (std::size_t k = 0; k < m; ++k) {
        if (flagged(k)) {
          result.outliers.push_back(retained[k]);
        } else {
          kept.push_back(retained[k]);
        }
      }
      retained = std::move(kept);
      std::fill(regular.begin(), regular.end(), 0);
      regular_count = 0;
    } else {
      for (std::size_t k = 0; k < m; ++k) {
        if (scores[k] < constants.a && !regular[retained[k]]) {
          regular[retained[k]] = 1;
          ++regular_count;
        }
      }
    }
  }
  std::sort(result.outliers.begin(), result.outliers.end());
  return result;
}

double vote_threshold(std::size_t runs, double alpha, VoteMode mode) {
  if (runs == 0) throw DomainError("vote needs at least one run");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("vote alpha must lie in (0, 1]");
  switch (mode) {
    case VoteMode::Proportional:
      return static_cast<double>(runs) * alpha;
    case VoteMode::Strengthened:
      return static_cast<double>(binomial_quantile(runs, alpha, 0.95));
    case VoteMode::Relaxed:
      return static_cast<double>(binomial_quantile(runs, alpha, 0.05));
  }
  return 0.0;
}

std::vector<std::size_t> declared_from_flags(std::span<const std::size_t> flags, double threshold) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (static_cast<double>(flags[i]) > threshold) out.push_back(i);
  }
  return out;
}

VoteReport vote_analyse(const DataMatrix& sample, const DetectorConstants& constants, std::size_t runs,
                        VoteMode mode, std::uint64_t master_seed, int threads, const AnalysisOptions& options) {
  VoteReport report;
  report.runs = runs;
  report.mode = mode;
  report.threshold = vote_threshold(runs, constants.alpha, mode);

  std::vector<std::vector<std::size_t>> found(runs);
  for_each_replicate(runs, threads, [&](std::size_t r) {
    Rng rng = Rng::derive(master_seed, r);
    found[r] = analyse_sample(sample, constants, rng, options).outliers;
  });

  report.flags.assign(sample.rows(), 0);
  for (const auto& run : found) {
    for (std::size_t i : run) ++report.flags[i];
  }
  report.declared = declared_from_flags(report.flags, report.threshold);
  return report;
}

}  // namespace rpod
