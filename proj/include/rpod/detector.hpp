#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rpod/rng.hpp"
#include "rpod/stats_core.hpp"

namespace rpod {

// Where a pair of constants came from.
struct ConstantsProvenance {
  std::string source = "unspecified";  // "calibrated", "tabulated", "user"
  std::uint64_t mc_size = 0;           // N used for the initial quantiles
  std::uint64_t seed = 0;
  double estimated_level = -1.0;       // < 0 when unknown
  double estimated_mean_projections = -1.0;
};

// Decision constants (a, b) of the sequential test, plus the design they
// were calibrated for. A projection score below a declares the point
// regular, above b an outlier, and anything in [a, b] asks for another
// projection.
struct DetectorConstants {
  double a = 0.0;
  double b = 0.0;
  std::size_t n = 0;
  std::size_t d = 0;
  double alpha = 0.05;
  double delta = 0.05;
  double h = 50.0;  // target mean number of projections at radius C_n^d
  ConstantsProvenance provenance;

  // Throws DomainError unless 0 < a <= b, h >= 1 and the probabilities are valid.
  void validate() const;
  // ceil(100 h): the default projection budget per decision.
  std::size_t default_cap() const;
};

enum class Verdict { Regular, Outlier };

std::string to_string(Verdict v);

struct Decision {
  Verdict verdict = Verdict::Regular;
  std::size_t projections_used = 0;
  double final_score = 0.0;  // |score| of the deciding projection
};

struct ClassifyOptions {
  std::size_t cap = 0;              // 0 selects constants.default_cap()
  int max_degenerate_retries = 32;  // consecutive MADN == 0 draws tolerated
  bool check_design = true;         // require sample shape == (n, d) of the constants
};

/// Sequential random-projection test for a single point against a reference
/// sample. Degenerate projections are redrawn and not counted. Throws
/// CapExceeded when `cap` projections all land in [a, b] and DegenerateData
/// after too many consecutive degenerate projections.
Decision classify_point(std::span<const double> point, const DataMatrix& sample,
                        const DetectorConstants& constants, Rng& rng, const ClassifyOptions& options = {});

struct AnalysisOptions {
  bool leave_one_out = false;        // estimators exclude the point being scored
  bool retest_regular = false;       // points already regular may still be flagged
  std::size_t round_cap = 200000;    // total projection rounds before CapExceeded
  int max_degenerate_retries = 32;
  bool check_design = true;
};

struct AnalysisResult {
  std::vector<std::size_t> outliers;  // original row indices, ascending
  std::size_t rounds = 0;
};

/// Whole-sample scan. Each round draws one direction and scores every
/// retained point against the retained sample. If an undecided point scores
/// above b, all such points are removed and the regular set is emptied;
/// otherwise undecided points scoring below a join the regular set. Regular
/// points are not re-flagged until the next reset, so each point runs its own
/// sequential test on the shared directions. Stops once every retained point
/// is regular (or fewer than three points remain).
AnalysisResult analyse_sample(const DataMatrix& sample, const DetectorConstants& constants, Rng& rng,
                              const AnalysisOptions& options = {});

enum class VoteMode { Proportional, Strengthened, Relaxed };

std::string to_string(VoteMode mode);
VoteMode vote_mode_from_string(const std::string& name);

struct VoteReport {
  std::size_t runs = 0;
  VoteMode mode = VoteMode::Proportional;
  double threshold = 0.0;            // declared iff flags > threshold
  std::vector<std::size_t> flags;    // per point, out of `runs`
  std::vector<std::size_t> declared;
};

/// Declaration threshold for a T-run vote at level alpha: T * alpha for the
/// proportional rule, or the 0.95 / 0.05 quantile of Binomial(T, alpha).
double vote_threshold(std::size_t runs, double alpha, VoteMode mode);

std::vector<std::size_t> declared_from_flags(std::span<const std::size_t> flags, double threshold);

/// Runs analyse_sample `runs` times, run r on the stream derived from
/// (master_seed, r), and declares points flagged more than the mode's
/// threshold. Runs are executed on up to `threads` OpenMP threads; the
/// result does not depend on the thread count.
VoteReport vote_analyse(const DataMatrix& sample, const DetectorConstants& constants, std::size_t runs,
                        VoteMode mode, std::uint64_t master_seed, int threads = 1,
                        const AnalysisOptions& options = {});

}  // namespace rpod
