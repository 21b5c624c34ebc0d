// Acceptance gate: one PASS/FAIL line per check, grouped by criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "rpod/calibration.hpp"
#include "rpod/cli.hpp"
#include "rpod/detector.hpp"
#include "rpod/experiments.hpp"
#include "rpod/level_kernels.hpp"
#include "rpod/parallel.hpp"
#include "rpod/rng.hpp"
#include "rpod/special_functions.hpp"
#include "rpod/stats_core.hpp"

using namespace rpod;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

int g_failures = 0;
int g_threads = 1;

double elapsed(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void report(int criterion, bool ok, const std::string& what) {
  std::cout << (ok ? "PASS" : "FAIL") << " [" << criterion << "] " << what << std::endl;
  if (!ok) ++g_failures;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

CovarianceSpec spec_of(CovarianceKind kind, std::size_t d) {
  CovarianceSpec s;
  s.kind = kind;
  s.d = d;
  return s;
}

// ---- 1: threshold table --------------------------------------------------------

void criterion_threshold_table() {
  const std::vector<std::size_t> ns{10, 20, 50, 100, 200, 1000};
  const std::map<std::size_t, std::vector<double>> table{
      {50, {8.91, 9.09, 9.30, 9.46, 9.79, 9.93}},
      {200, {15.97, 16.14, 16.35, 16.50, 16.64, 16.95}},
      {500, {24.19, 24.35, 24.56, 24.71, 24.85, 25.15}},
      {1000, {33.44, 33.61, 33.82, 33.96, 34.10, 34.40}}};
  const auto t0 = Clock::now();
  int matched = 0;
  for (const auto& [d, row] : table) {
    for (std::size_t k = 0; k < ns.size(); ++k) {
      const double c = threshold_cnd(ns[k], d, 0.05).c_nd;
      const bool ok = std::fabs(c - row[k]) <= 0.01 + 1e-9;
      matched += ok;
      if (!ok) {
        report(1, false, fmt("C_n^d(0.05) n=%.0f d=%.0f: computed %.4f, table %.2f", ns[k], d, c, row[k]));
      }
    }
  }
  const double secs = elapsed(t0);
  report(1, matched == 24, fmt("%.0f of 24 threshold cells within 0.01", matched));
  report(1, secs < 1.0, fmt("threshold table computed in %.3f s (< 1 s)", secs));
}

// ---- 2: calibration reproduction -----------------------------------------------

void criterion_calibration() {
  struct Cell {
    std::size_t n, d;
    double h;
    double a_fine, b_fine;    // N = 10^6
    double a_desk, b_desk;    // N = 10^5
  };
  const std::vector<Cell> cells{{50, 50, 50, 0.0325, 4.9714, 0.0333, 4.9870},
                                {50, 1000, 100, 0.0130, 4.5217, 0.0122, 4.5825},
                                {500, 50, 50, 0.0336, 4.4525, 0.0340, 4.4449},
                                {500, 1000, 100, 0.0130, 3.8197, 0.0123, 3.8329}};
  for (const Cell& c : cells) {
    CalibrationTarget target;
    target.n = c.n;
    target.d = c.d;
    target.h = c.h;
    target.mc_size = 100000;
    const auto t0 = Clock::now();
    const CalibrationResult r = calibrate(target, 20240601, g_threads);
    const double secs = elapsed(t0);
    const double a_lo = std::min(c.a_fine, c.a_desk) - 0.003, a_hi = std::max(c.a_fine, c.a_desk) + 0.003;
    const double b_lo = std::min(c.b_fine, c.b_desk) - 0.08, b_hi = std::max(c.b_fine, c.b_desk) + 0.08;
    const std::string cell = fmt("n=%.0f d=%.0f l=%.0f", c.n, c.d, c.h);
    report(2, r.constants.a >= a_lo && r.constants.a <= a_hi,
           cell + fmt(": a = %.4f in [%.4f, %.4f]", r.constants.a, a_lo, a_hi));
    report(2, r.constants.b >= b_lo && r.constants.b <= b_hi,
           cell + fmt(": b = %.4f in [%.4f, %.4f]", r.constants.b, b_lo, b_hi));
    report(2, secs <= 300.0,
           cell + fmt(": calibrated in %.1f s on %.0f thread(s) (<= 300 s)", secs, g_threads));
  }
}

// ---- 3, 4: level and power -------------------------------------------------------

void criterion_level() {
  for (std::size_t d : {50, 500}) {
    const DetectorConstants c = *tabulated_constants(50, d, 50);
    ExperimentOptions opts;
    opts.threads = g_threads;
    const auto r = run_level_experiment(50, d, spec_of(CovarianceKind::Identity, d), 1.0, c, 2000, 3000 + d, opts);
    report(3, r.rejection_proportion >= 0.035 && r.rejection_proportion <= 0.065 && r.capped == 0,
           fmt("level n=50 d=%.0f l=50: %.4f in [0.035, 0.065] (mean projections %.1f)", d,
               r.rejection_proportion, r.mean_projections));
  }
}

void criterion_power() {
  struct Cell {
    double h, prob, proj;
  };
  for (const Cell& cell : {Cell{50, 0.8817, 12}, Cell{100, 0.9259, 16}}) {
    const DetectorConstants c = *tabulated_constants(50, 50, cell.h);
    ExperimentOptions opts;
    opts.threads = g_threads;
    const auto r = run_level_experiment(50, 50, spec_of(CovarianceKind::Identity, 50), 2.0, c, 2000,
                                        4000 + static_cast<std::uint64_t>(cell.h), opts);
    report(4, std::fabs(r.rejection_proportion - cell.prob) <= 0.04,
           fmt("power r=2 l=%.0f: %.4f within 0.04 of %.4f", cell.h, r.rejection_proportion, cell.prob));
    report(4, std::fabs(r.mean_projections - cell.proj) <= 0.25 * cell.proj,
           fmt("projections r=2 l=%.0f: %.2f within 25%% of %.0f", cell.h, r.mean_projections, cell.proj));
  }
}

// ---- 5: projection budget ----------------------------------------------------------

void criterion_projection_budget() {
  const std::size_t n = 50, reps = 1000;
  const double h = 50;
  ExperimentOptions opts;
  opts.threads = g_threads;
  const std::size_t d = 100;
  const DetectorConstants c = *tabulated_constants(n, d, h);
  for (auto kind : {CovarianceKind::Identity, CovarianceKind::Sigma1, CovarianceKind::Sigma2, CovarianceKind::Sigma4}) {
    const auto r = run_level_experiment(n, d, spec_of(kind, d), 1.0, c, reps, 5000 + static_cast<int>(kind), opts);
    report(5, std::fabs(r.mean_projections - h) <= 0.1 * h && r.capped == 0,
           "d=100 " + to_string(kind) + fmt(": mean projections %.1f within 10%% of %.0f", r.mean_projections, h));
  }
  for (std::size_t dd : {100, 500}) {
    const DetectorConstants cd = *tabulated_constants(n, dd, h);
    const auto r = run_level_experiment(n, dd, spec_of(CovarianceKind::Sigma3, dd), 1.0, cd, reps, 5100 + dd, opts);
    report(5, r.mean_projections >= 2.0 * h,
           fmt("d=%.0f sigma3: mean projections %.1f >= %.0f (capped %.0f)", dd, r.mean_projections, 2 * h,
               r.capped));
  }
}

// ---- 6: masking and swamping ----------------------------------------------------------

void criterion_masking() {
  const DetectorConstants c = *tabulated_constants(50, 50, 50);
  ExperimentOptions opts;
  opts.threads = g_threads;
  const auto r = run_contamination_experiment(50, 50, spec_of(CovarianceKind::Identity, 50),
                                              {1.05, 1.25, 1.5, 2.0, 3.0}, c, 500, 6006, opts);
  report(6, r.failed == 0, fmt("%.0f of 500 replicates completed", r.completed));
  report(6, r.swamping_proportion <= 0.01, fmt("swamping %.4f <= 0.01", r.swamping_proportion));
  report(6, r.per_radius.at(4).proportion >= 0.92, fmt("detection at r=3: %.4f >= 0.92", r.per_radius[4].proportion));
  const double p105 = r.per_radius.at(0).proportion;
  report(6, p105 >= 0.03 && p105 <= 0.12, fmt("detection at r=1.05: %.4f in [0.03, 0.12]", p105));
}

// ---- 7: moment oracle ---------------------------------------------------------------

void criterion_moments() {
  const std::size_t n = 50, d = 50;
  const DetectorConstants c = *tabulated_constants(n, d, 50);
  const double t = threshold_cnd(n, d, 0.05).c_nd;
  const std::vector<double> scores = simulate_scores(n, d, t, 100000, 7007, g_threads);
  const double fa = static_cast<double>(std::count_if(scores.begin(), scores.end(), [&](double s) { return s <= c.a; })) /
                    static_cast<double>(scores.size());
  const double fb = static_cast<double>(std::count_if(scores.begin(), scores.end(), [&](double s) { return s <= c.b; })) /
                    static_cast<double>(scores.size());
  const ProjectionMoments m = expected_projections_identity(fa, fb);
  LevelOptions opts;
  opts.threads = g_threads;
  opts.cap = c.default_cap();
  const LevelEstimate e = estimate_level_isotropic(c.a, c.b, n, d, t, 10000, 7008, opts);
  report(7, std::fabs(e.mean_projections - m.mean) <= 0.10 * m.mean,
         fmt("mean K %.2f vs oracle %.2f (within 10%%)", e.mean_projections, m.mean));
  report(7, std::fabs(e.var_projections - m.variance) <= 0.25 * m.variance,
         fmt("var K %.1f vs oracle %.1f (within 25%%)", e.var_projections, m.variance));
}

// ---- 8: invariances -----------------------------------------------------------------

void criterion_invariances() {
  int exact = 0;
  const int instances = 100;
  for (int k = 0; k < instances; ++k) {
    Rng g = Rng::derive(8008, k);
    const std::size_t n = 10 + k % 40, d = 2 + k % 30;
    std::vector<double> v(n * d), x(d), mu(d);
    for (double& e : v) e = g.normal();
    for (double& e : x) e = 2.0 * g.normal();
    for (double& e : mu) e = 20.0 * g.normal();
    const double scale = 0.01 + 10.0 * g.uniform();
    std::vector<double> tv(n * d), tx(d);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) tv[i * d + j] = scale * v[i * d + j] + mu[j];
    for (std::size_t j = 0; j < d; ++j) tx[j] = scale * x[j] + mu[j];
    DetectorConstants c;
    c.a = 0.05;
    c.b = 3.0;
    c.n = n;
    c.d = d;
    c.h = 20;
    Rng r0(k), r1(k);
    const Decision d0 = classify_point(x, DataMatrix(n, d, v), c, r0);
    const Decision d1 = classify_point(tx, DataMatrix(n, d, tv), c, r1);
    exact += d0.verdict == d1.verdict && d0.projections_used == d1.projections_used &&
             std::fabs(d0.final_score - d1.final_score) <= 1e-9 * std::max(1.0, d0.final_score);
  }
  report(8, exact == instances, fmt("shift/scale invariance exact on %.0f of %.0f instances", exact, instances));

  const std::size_t reps = 5000;
  const DetectorConstants c = *tabulated_constants(50, 50, 50);
  ExperimentOptions opts;
  opts.threads = g_threads;
  std::vector<double> p;
  for (double r : {1.0, 1.2, 2.0}) {
    p.push_back(run_level_experiment(50, 50, spec_of(CovarianceKind::Identity, 50), r, c, reps,
                                     8100 + static_cast<std::uint64_t>(10 * r), opts)
                    .rejection_proportion);
  }
  for (std::size_t i = 1; i < p.size(); ++i) {
    const double se = std::sqrt(p[i] * (1 - p[i]) / reps + p[i - 1] * (1 - p[i - 1]) / reps);
    report(8, p[i] - p[i - 1] >= 3.0 * se,
           fmt("rejection %.4f -> %.4f, gap %.4f >= 3 SE (%.4f)", p[i - 1], p[i], p[i] - p[i - 1], 3 * se));
  }
}

// ---- 9: brute-force oracles -----------------------------------------------------------

void criterion_oracles() {
  std::size_t lists = 0, mismatches = 0;
  std::vector<double> v;
  for (std::size_t len = 1; len <= 8; ++len) {
    v.assign(len, -2.0);
    for (;;) {
      std::vector<double> s = v;
      std::sort(s.begin(), s.end());
      const double med = len % 2 ? s[len / 2] : 0.5 * (s[len / 2 - 1] + s[len / 2]);
      std::vector<double> dev;
      for (double x : v) dev.push_back(std::fabs(x - med));
      std::sort(dev.begin(), dev.end());
      const double mad = len % 2 ? dev[len / 2] : 0.5 * (dev[len / 2 - 1] + dev[len / 2]);
      mismatches += median(v) != med || std::fabs(madn(v) - mad / normal_q3()) > 1e-15;
      ++lists;
      std::size_t k = 0;
      while (k < len && v[k] == 2.0) v[k++] = -2.0;
      if (k == len) break;
      v[k] += 1.0;
    }
  }
  report(9, mismatches == 0, fmt("median/madn match the sort oracle on %.0f lists (%.0f mismatches)",
                                 static_cast<double>(lists), static_cast<double>(mismatches)));

  double worst = 0.0;
  int points = 0;
  const std::vector<unsigned> dofs{1, 2, 3, 5, 10, 50, 100, 500, 1000, 5000};
  for (unsigned d : dofs) {
    for (int i = 0; i < 20; ++i) {
      // p spread over (0, 1) with both tails represented
      const double p = i == 0 ? 1e-10 : i == 19 ? 1 - 1e-10 : i / 19.0;
      const double q = chi2_quantile(p, d);
      worst = std::max(worst, std::fabs(boost::math::gamma_p(d / 2.0, q / 2.0) - p));
      ++points;
    }
  }
  report(9, points == 200 && worst <= 1e-9,
         fmt("chi2 quantile inversion on %.0f (p, d) points: max error %.2e <= 1e-9", points, worst));
}

// ---- 10: determinism --------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion_determinism() {
  const fs::path base = fs::temp_directory_path() / "rpod_acceptance_determinism";
  fs::remove_all(base);
  std::vector<std::string> outputs;
  for (const char* run : {"first", "second"}) {
    const fs::path dir = base / run;
    const std::vector<std::string> args{"rpod", "simulate", "--paper-table", "6", "--d", "50", "--cov", "identity",
                                        "--reps", "500", "--seed", "1010", "--threads", "1",
                                        "--output", dir.string()};
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    if (code != 0) {
      report(10, false, "simulate exited with " + std::to_string(code) + ": " + err.str());
      return;
    }
    std::string all;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) all += f.filename().string() + "\n" + slurp(f);
    outputs.push_back(all);
  }
  report(10, !outputs[0].empty() && outputs[0] == outputs[1],
         fmt("two simulate runs (--threads 1, same seed) wrote byte-identical JSON (%.0f bytes)",
             static_cast<double>(outputs[0].size())));
  fs::remove_all(base);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::vector<int> selected;
  g_threads = available_threads();
  app.add_option("--criterion", selected, "Criteria to run (default: all)")->check(CLI::Range(1, 10));
  app.add_option("--threads", g_threads, "Worker threads")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  const std::map<int, std::function<void()>> criteria{
      {1, criterion_threshold_table}, {2, criterion_calibration},       {3, criterion_level},
      {4, criterion_power},           {5, criterion_projection_budget}, {6, criterion_masking},
      {7, criterion_moments},         {8, criterion_invariances},       {9, criterion_oracles},
      {10, criterion_determinism}};
  std::set<int> run(selected.begin(), selected.end());
  if (run.empty())
    for (const auto& [k, fn] : criteria) run.insert(k);
  for (int k : run) {
    const auto t0 = Clock::now();
    try {
      criteria.at(k)();
    } catch (const std::exception& e) {
      report(k, false, std::string("threw: ") + e.what());
    }
    std::cout << "      [" << k << "] " << fmt("%.1f s", elapsed(t0)) << std::endl;
  }
  std::cout << (g_failures == 0 ? "ALL PASS" : std::to_string(g_failures) + " FAILED") << std::endl;
  return g_failures == 0 ? 0 : 1;
}
