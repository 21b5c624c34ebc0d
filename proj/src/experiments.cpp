#include "rpod/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>

#include "rpod/error.hpp"
#include "rpod/level_kernels.hpp"
#include "rpod/parallel.hpp"
#include "rpod/stats_core.hpp"

namespace rpod {

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Level: return "level";
    case ExperimentKind::Contamination: return "contamination";
    case ExperimentKind::CleanSample: return "clean";
  }
  return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
  if (name == "level") return ExperimentKind::Level;
  if (name == "contamination" || name == "masking") return ExperimentKind::Contamination;
  if (name == "clean") return ExperimentKind::CleanSample;
  throw InputError("unknown experiment kind '" + name + "'");
}

std::vector<std::size_t> planted_counts(std::size_t n, std::size_t radius_count, double fraction) {
  std::vector<std::size_t> counts(radius_count, 0);
  if (radius_count == 0) return counts;
  const auto total = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  for (std::size_t k = 0; k < radius_count; ++k) {
    counts[k] = total / radius_count + (k < total % radius_count ? 1 : 0);
  }
  return counts;
}

namespace {

void check_common(std::size_t n, std::size_t d, const CovarianceSpec& spec, const DetectorConstants& constants,
                  std::size_t reps) {
  constants.validate();
  if (reps == 0) throw DomainError("experiment: reps must be positive");
  if (spec.d != d) throw DomainError("experiment: covariance dimension differs from d");
  if (constants.d != d) throw DomainError("experiment: constants calibrated for another dimension");
  if (constants.n != n) throw DomainError("experiment: constants calibrated for another sample size");
}

ExperimentScenario make_scenario(ExperimentKind kind, std::size_t n, std::size_t d, const CovarianceSpec& spec,
                                 std::vector<double> radii, const DetectorConstants& constants, std::size_t reps,
                                 std::uint64_t seed) {
  ExperimentScenario s;
  s.kind = kind;
  s.n = n;
  s.d = d;
  s.covariance = spec;
  s.radii = std::move(radii);
  s.reps = reps;
  s.constants = constants;
  std::ostringstream id;
  id << constants.provenance.source << ":n=" << constants.n << ",d=" << constants.d << ",h=" << constants.h;
  s.constants_id = id.str();
  s.seed = seed;
  return s;
}

// Per-replicate covariance: fixed families are built once and shared.
class ModelSource {
 public:
  explicit ModelSource(const CovarianceSpec& spec) : spec_(spec) {
    if (spec.kind != CovarianceKind::RandomGram) fixed_ = build_covariance(spec);
  }
  const CovarianceModel& get(Rng& rng, std::optional<CovarianceModel>& own) const {
    if (fixed_) return *fixed_;
    own = build_covariance(spec_, rng);
    return *own;
  }

 private:
  CovarianceSpec spec_;
  std::optional<CovarianceModel> fixed_;
};

struct ScanOutcome {
  bool ok = false;
  std::vector<std::size_t> detected_per_radius;
  std::size_t clean_flagged = 0;
};

}  // namespace

ExperimentReport run_level_experiment(std::size_t n, std::size_t d, const CovarianceSpec& spec, double r,
                                      const DetectorConstants& constants, std::size_t reps, std::uint64_t seed,
                                      const ExperimentOptions& options) {
  check_common(n, d, spec, constants, reps);
  if (!(r > 0.0)) throw DomainError("run_level_experiment: radius multiplier must be positive");
  ExperimentReport report;
  report.scenario = make_scenario(ExperimentKind::Level, n, d, spec, {r}, constants, reps, seed);
  const double t = r * threshold_cnd(n, d, constants.delta).c_nd;

  LevelOptions lopts;
  lopts.threads = options.threads;
  lopts.cap = options.cap > 0 ? options.cap : constants.default_cap();
  lopts.tolerate_cap = true;

  LevelEstimate est;
  if (spec.kind == CovarianceKind::Identity && !options.force_direct) {
    report.engine = "isotropic";
    est = estimate_level_isotropic(constants.a, constants.b, n, d, t, reps, seed, lopts);
  } else {
    report.engine = "direct";
    est = estimate_level_covariance(constants, spec, t, reps, seed, lopts);
  }
  report.completed = est.reps - est.capped;
  report.capped = est.capped;
  report.rejection_proportion = est.level;
  report.mean_projections = est.mean_projections;
  return report;
}

namespace {

ExperimentReport run_scan_experiment(ExperimentKind kind, std::size_t n, std::size_t d, const CovarianceSpec& spec,
                                     const std::vector<double>& radii, const DetectorConstants& constants,
                                     std::size_t reps, std::uint64_t seed, const ExperimentOptions& options) {
  check_common(n, d, spec, constants, reps);
  const std::vector<std::size_t> counts = planted_counts(n, radii.size(), options.contamination_fraction);
  std::size_t planted_total = 0;
  for (std::size_t c : counts) planted_total += c;
  if (planted_total + 3 > n) throw DomainError("contamination: too few clean points");
  const std::size_t clean = n - planted_total;
  const double c_nd = threshold_cnd(n, d, constants.delta).c_nd;

  ExperimentReport report;
  report.scenario = make_scenario(kind, n, d, spec, radii, constants, reps, seed);
  report.engine = "direct";

  const ModelSource models(spec);
  std::vector<ScanOutcome> outcomes(reps);
  for_each_replicate(reps, options.threads, [&](std::size_t rep) {
    Rng rng = Rng::derive(seed, rep);
    std::optional<CovarianceModel> own;
    const CovarianceModel& model = models.get(rng, own);

    std::vector<double> values;
    values.reserve(n * d);
    const DataMatrix clean_rows = sample_gaussian(clean, model, rng);
    values.insert(values.end(), clean_rows.values().begin(), clean_rows.values().end());
    std::vector<std::size_t> radius_of_row;  // for planted rows, index into radii
    for (std::size_t k = 0; k < radii.size(); ++k) {
      for (std::size_t j = 0; j < counts[k]; ++j) {
        const std::vector<double> p = sample_on_mahalanobis_sphere(model, radii[k] * c_nd, rng);
        values.insert(values.end(), p.begin(), p.end());
        radius_of_row.push_back(k);
      }
    }
    const DataMatrix sample(n, d, std::move(values));

    ScanOutcome o;
    o.detected_per_radius.assign(radii.size(), 0);
    try {
      const AnalysisResult res = analyse_sample(sample, constants, rng);
      for (std::size_t idx : res.outliers) {
        if (idx < clean) {
          ++o.clean_flagged;
        } else {
          ++o.detected_per_radius[radius_of_row[idx - clean]];
        }
      }
      o.ok = true;
    } catch (const DegenerateData&) {
    } catch (const CapExceeded&) {
    }
    outcomes[rep] = std::move(o);
  });

  report.per_radius.resize(radii.size());
  for (std::size_t k = 0; k < radii.size(); ++k) report.per_radius[k].radius = radii[k];
  for (const auto& o : outcomes) {
    if (!o.ok) {
      ++report.failed;
      continue;
    }
    ++report.completed;
    report.clean_points += clean;
    report.clean_flagged += o.clean_flagged;
    for (std::size_t k = 0; k < radii.size(); ++k) {
      report.per_radius[k].planted += counts[k];
      report.per_radius[k].detected += o.detected_per_radius[k];
    }
  }
  for (auto& pr : report.per_radius) {
    pr.proportion = pr.planted > 0 ? static_cast<double>(pr.detected) / static_cast<double>(pr.planted) : 0.0;
  }
  report.swamping_proportion = report.clean_points > 0 ? static_cast<double>(report.clean_flagged) /
                                                             static_cast<double>(report.clean_points)
                                                       : 0.0;
  report.rejection_proportion = report.swamping_proportion;
  return report;
}

}  // namespace

ExperimentReport run_contamination_experiment(std::size_t n, std::size_t d, const CovarianceSpec& spec,
                                              const std::vector<double>& radii, const DetectorConstants& constants,
                                              std::size_t reps, std::uint64_t seed, const ExperimentOptions& options) {
  for (double r : radii) {
    if (!(r > 0.0)) throw DomainError("contamination: radius multipliers must be positive");
  }
  return run_scan_experiment(ExperimentKind::Contamination, n, d, spec, radii, constants, reps, seed, options);
}

ExperimentReport run_clean_sample_experiment(std::size_t n, std::size_t d, const CovarianceSpec& spec,
                                             const DetectorConstants& constants, std::size_t reps,
                                             std::uint64_t seed, const ExperimentOptions& options) {
  return run_scan_experiment(ExperimentKind::CleanSample, n, d, spec, {}, constants, reps, seed, options);
}

Scale scale_from_string(const std::string& name) {
  if (name == "desk") return Scale::Desk;
  if (name == "full") return Scale::Full;
  throw InputError("unknown scale '" + name + "' (expected desk or full)");
}

std::string to_string(Scale scale) { return scale == Scale::Desk ? "desk" : "full"; }

std::vector<PresetCell> preset_cells(const std::string& name, Scale scale) {
  const bool desk = scale == Scale::Desk;
  const std::vector<CovarianceKind> families{CovarianceKind::Identity, CovarianceKind::Sigma1,
                                             CovarianceKind::Sigma2, CovarianceKind::Sigma3,
                                             CovarianceKind::Sigma4};
  std::vector<PresetCell> cells;
  if (name == "5" || name == "6") {
    const std::vector<double> radii = name == "5" ? std::vector<double>{1.0} : std::vector<double>{1.2, 2.0};
    for (std::size_t d : {50, 100, 500, 1000}) {
      for (double r : radii) {
        for (double h : {50.0, 100.0}) {
          for (CovarianceKind cov : families) {
            cells.push_back({ExperimentKind::Level, 50, d, cov, {r}, h, 0.05, false, desk ? 1000u : 5000u});
          }
        }
      }
    }
  } else if (name == "masking") {
    for (std::size_t n : {50, 100}) {
      for (std::size_t d : {50, 500, 1000}) {
        for (CovarianceKind cov : families) {
          cells.push_back({ExperimentKind::Contamination, n, d, cov, {1.05, 1.25, 1.5, 2.0, 3.0}, 50.0, 0.05, false,
                           desk ? 500u : 1000u});
        }
      }
    }
  } else if (name == "7") {
    for (std::size_t n : {50, 100}) {
      for (std::size_t d : {50, 500, 1000}) {
        for (CovarianceKind cov : {CovarianceKind::Identity, CovarianceKind::ExpDecay, CovarianceKind::RandomGram}) {
          cells.push_back({ExperimentKind::CleanSample, n, d, cov, {}, 50.0, 0.1, true, desk ? 100u : 500u});
        }
      }
    }
  } else {
    throw InputError("unknown preset '" + name + "' (expected 5, 6, 7 or masking)");
  }
  return cells;
}

namespace {

std::string fmt(double v, int prec) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

std::string render_rows(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t j = 0; j < header.size(); ++j) width[j] = header[j].size();
  for (const auto& r : rows)
    for (std::size_t j = 0; j < r.size(); ++j) width[j] = std::max(width[j], r[j].size());
  std::ostringstream os;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (j > 0) os << "  ";
      os << std::string(width[j] - cells[j].size(), ' ') << cells[j];
    }
    os << '\n';
  };
  line(header);
  std::size_t total = 0;
  for (std::size_t w : width) total += w;
  os << std::string(total + 2 * (width.size() - 1), '-') << '\n';
  for (const auto& r : rows) line(r);
  return os.str();
}

}  // namespace

std::string render_table(const std::vector<ExperimentReport>& reports) {
  if (reports.empty()) return "";
  const ExperimentKind kind = reports.front().scenario.kind;
  std::vector<std::vector<std::string>> rows;
  if (kind == ExperimentKind::Level) {
    for (const auto& r : reports) {
      const auto& s = r.scenario;
      rows.push_back({std::to_string(s.n), std::to_string(s.d), to_string(s.covariance.kind), fmt(s.radii.at(0), 2),
                      fmt(s.constants.h, 0), fmt(s.constants.a, 4), fmt(s.constants.b, 4), std::to_string(s.reps),
                      fmt(r.mean_projections, 1), fmt(r.rejection_proportion, 4), std::to_string(r.capped)});
    }
    return render_rows({"n", "d", "Sigma", "r", "l", "a", "b", "reps", "mean_proj", "reject", "capped"}, rows);
  }
  if (kind == ExperimentKind::Contamination) {
    std::vector<std::string> header{"n", "d", "Sigma", "reps", "<C_n^d"};
    for (const auto& pr : reports.front().per_radius) header.push_back(fmt(pr.radius, 2));
    header.push_back("failed");
    for (const auto& r : reports) {
      const auto& s = r.scenario;
      std::vector<std::string> row{std::to_string(s.n), std::to_string(s.d), to_string(s.covariance.kind),
                                   std::to_string(s.reps), fmt(r.swamping_proportion, 4)};
      for (const auto& pr : r.per_radius) row.push_back(fmt(pr.proportion, 4));
      row.push_back(std::to_string(r.failed));
      row.resize(header.size());
      rows.push_back(std::move(row));
    }
    return render_rows(header, rows);
  }
  for (const auto& r : reports) {
    const auto& s = r.scenario;
    rows.push_back({std::to_string(s.n), std::to_string(s.d), to_string(s.covariance.kind), fmt(s.constants.a, 4),
                    fmt(s.constants.b, 4), std::to_string(s.reps), fmt(r.swamping_proportion, 4),
                    std::to_string(r.failed)});
  }
  return render_rows({"n", "d", "Sigma", "a", "b", "reps", "flagged", "failed"}, rows);
}

}  // namespace rpod
