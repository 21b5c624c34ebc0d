#include "rpod/cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rpod/calibration.hpp"
#include "rpod/covariance.hpp"
#include "rpod/detector.hpp"
#include "rpod/error.hpp"
#include "rpod/experiments.hpp"
#include "rpod/parallel.hpp"
#include "rpod/report_io.hpp"
#include "rpod/rng.hpp"
#include "rpod/stats_core.hpp"

namespace rpod {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fixed(double v, int prec) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

struct ConstantsRequest {
  std::size_t n = 0;
  std::size_t d = 0;
  double alpha = 0.05;
  double delta = 0.05;
  double h = 50.0;
  std::size_t mc_size = 100000;
  std::uint64_t seed = 1;
  std::string cache_dir = ".rpod-cache";
  bool force = false;
  bool tuned = false;  // radius q_d^n instead of C_n^d
  int threads = 1;
};

constexpr std::size_t kTuningSamples = 2000;

CalibrationTarget target_for(const ConstantsRequest& req) {
  CalibrationTarget t;
  t.n = req.n;
  t.d = req.d;
  t.alpha = req.alpha;
  t.delta = req.delta;
  t.h = req.h;
  t.mc_size = req.mc_size;
  try {
    t.validate();
  } catch (const DomainError& e) {
    throw InputError(e.what());
  }
  if (req.tuned) t.radius = tuning_radius(req.n, req.d, kTuningSamples, sub_seed(req.seed, 7));
  return t;
}

// Cache hit unless forced; otherwise calibrate and write through.
DetectorConstants resolve_constants(const ConstantsRequest& req, std::ostream& err, bool* from_cache = nullptr,
                                    std::optional<CalibrationResult>* full = nullptr) {
  const CalibrationTarget target = target_for(req);
  const fs::path dir = req.tuned ? fs::path(req.cache_dir) / "tuned" : fs::path(req.cache_dir);
  CalibrationCache cache(dir);
  const CacheKey key = cache_key(target, req.seed);
  if (!req.force) {
    if (auto hit = cache.lookup(key)) {
      if (from_cache) *from_cache = true;
      return constants_from_cache(key, *hit);
    }
  }
  err << "calibrating n=" << req.n << " d=" << req.d << " alpha=" << req.alpha << " h=" << req.h
      << " N=" << req.mc_size << (req.tuned ? " (tuned radius)" : "") << " ...\n";
  const auto start = Clock::now();
  CalibrationResult res = calibrate(target, req.seed, req.threads);
  err << "calibration took " << fixed(seconds_since(start), 1) << " s\n";
  cache.store(key, {res.constants.a, res.constants.b, res.estimated_level, res.estimated_mean_projections,
                    utc_timestamp()});
  if (from_cache) *from_cache = false;
  if (full) *full = res;
  return res.constants;
}

// ---- calibrate -------------------------------------------------------------

struct CalibrateArgs {
  ConstantsRequest req;
  std::string output;
};

int cmd_calibrate(const CalibrateArgs& args, std::ostream& out, std::ostream& err) {
  const auto start = Clock::now();
  bool cached = false;
  std::optional<CalibrationResult> full;
  const DetectorConstants c = resolve_constants(args.req, err, &cached, &full);
  const double c_nd = threshold_cnd(c.n, c.d, c.delta).c_nd;

  out << "n=" << c.n << " d=" << c.d << " alpha=" << c.alpha << " delta=" << c.delta << " h=" << c.h
      << " N=" << args.req.mc_size << " seed=" << args.req.seed << "\n";
  out << "C_n^d = " << fixed(c_nd, 4) << "\n";
  out << "a = " << fixed(c.a, 4) << "  b = " << fixed(c.b, 4) << "\n";
  out << "estimated level " << fixed(c.provenance.estimated_level, 4) << ", mean projections "
      << fixed(c.provenance.estimated_mean_projections, 1) << "\n";
  if (cached) {
    out << "source: cache " << (fs::path(args.req.cache_dir) / "calibration_cache.json").string() << "\n";
  } else {
    out << "source: computed in " << fixed(seconds_since(start), 1) << " s\n";
  }
  if (!args.output.empty()) {
    const Json j = full ? to_json(*full) : Json{{"constants", to_json(c)}};
    write_text_file(args.output, j.dump(2) + "\n");
  }
  return kExitOk;
}

// ---- detect ----------------------------------------------------------------

struct DetectArgs {
  ConstantsRequest req;
  std::string input;
  std::string constants_file;
  bool tabulated = false;
  std::size_t runs = 100;
  std::string mode = "proportional";
  std::uint64_t seed = 1;
  std::string output;
  bool leave_one_out = false;
};

int cmd_detect(DetectArgs args, std::ostream& out, std::ostream& err) {
  const CsvTable table = read_csv(args.input);
  const std::size_t n = table.data.rows();
  const std::size_t d = table.data.cols();
  if (n < 3 || d < 2) throw InputError("dataset needs at least 3 rows and 2 columns, got " + std::to_string(n) + "x" +
                                       std::to_string(d));
  DetectorConstants c;
  if (!args.constants_file.empty()) {
    c = load_constants_file(args.constants_file);
  } else if (args.tabulated) {
    auto t = tabulated_constants(n, d, args.req.h);
    if (!t) throw InputError("no tabulated constants for n=" + std::to_string(n) + ", d=" + std::to_string(d));
    c = *t;
  } else {
    args.req.n = n;
    args.req.d = d;
    c = resolve_constants(args.req, err);
  }
  if (c.n != n || c.d != d) {
    throw InputError("constants were calibrated for n=" + std::to_string(c.n) + ", d=" + std::to_string(c.d) +
                     " but the dataset is " + std::to_string(n) + "x" + std::to_string(d));
  }

  AnalysisOptions aopts;
  aopts.leave_one_out = args.leave_one_out;
  const auto start = Clock::now();
  const VoteReport vote =
      vote_analyse(table.data, c, args.runs, vote_mode_from_string(args.mode), args.seed, args.req.threads, aopts);

  DetectionReport report;
  report.n = n;
  report.d = d;
  report.content_hash = table.content_hash;
  report.input = args.input;
  report.constants = c;
  report.vote = vote;
  report.seed = args.seed;
  report.seconds = seconds_since(start);

  out << "dataset " << args.input << ": " << n << " x " << d << " (fnv1a " << hex64(table.content_hash) << ")\n";
  out << "constants a=" << fixed(c.a, 4) << " b=" << fixed(c.b, 4) << " (" << c.provenance.source << ")\n";
  out << "T=" << vote.runs << " mode=" << to_string(vote.mode) << " threshold=" << vote.threshold
      << " seed=" << args.seed << "\n\n";
  out << " point  flags  proportion  declared\n";
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool declared = k < vote.declared.size() && vote.declared[k] == i;
    if (declared) ++k;
    const double p = static_cast<double>(vote.flags[i]) / static_cast<double>(vote.runs);
    char line[80];
    std::snprintf(line, sizeof line, "%6zu  %5zu  %10.2f  %8s\n", i + 1, vote.flags[i], p, declared ? "yes" : "");
    out << line;
  }
  out << "\n" << vote.declared.size() << " point(s) declared; " << fixed(report.seconds, 2) << " s\n";
  if (!args.output.empty()) write_text_file(args.output, to_json(report).dump(2) + "\n");
  return kExitOk;
}

// ---- simulate --------------------------------------------------------------

struct SimulateArgs {
  ConstantsRequest req;
  std::string paper_table;
  std::string scale = "desk";
  std::string experiment;
  std::size_t n = 0;
  std::size_t d = 0;
  std::string cov;
  std::optional<std::uint64_t> rotation_seed;
  std::vector<double> radii;
  std::size_t reps = 0;
  std::string constants_file;
  std::uint64_t seed = 1;
  std::string output = "rpod-sim";
  bool force_direct = false;
};

struct Cell {
  ExperimentKind kind = ExperimentKind::Level;
  std::size_t n = 0;
  std::size_t d = 0;
  CovarianceSpec spec;
  std::vector<double> radii;
  std::size_t reps = 0;
  DetectorConstants constants;
};

ExperimentReport run_cell(const Cell& cell, std::uint64_t seed, const ExperimentOptions& opts) {
  switch (cell.kind) {
    case ExperimentKind::Level:
      return run_level_experiment(cell.n, cell.d, cell.spec, cell.radii.at(0), cell.constants, cell.reps, seed, opts);
    case ExperimentKind::Contamination:
      return run_contamination_experiment(cell.n, cell.d, cell.spec, cell.radii, cell.constants, cell.reps, seed,
                                          opts);
    case ExperimentKind::CleanSample:
      return run_clean_sample_experiment(cell.n, cell.d, cell.spec, cell.constants, cell.reps, seed, opts);
  }
  throw Error("unknown experiment kind");
}

int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err) {
  std::vector<Cell> cells;
  if (!args.paper_table.empty()) {
    const Scale scale = scale_from_string(args.scale);
    for (const PresetCell& p : preset_cells(args.paper_table, scale)) {
      if (args.n != 0 && p.n != args.n) continue;
      if (args.d != 0 && p.d != args.d) continue;
      if (!args.cov.empty() && p.covariance != covariance_kind_from_string(args.cov)) continue;
      Cell c;
      c.kind = p.kind;
      c.n = p.n;
      c.d = p.d;
      c.spec.kind = p.covariance;
      c.spec.d = p.d;
      c.radii = p.radii;
      c.reps = args.reps > 0 ? args.reps : p.reps;
      std::optional<DetectorConstants> tab;
      if (!p.tuned && p.alpha == 0.05) tab = tabulated_constants(p.n, p.d, p.h);
      if (tab) {
        c.constants = *tab;
      } else {
        ConstantsRequest req = args.req;
        req.n = p.n;
        req.d = p.d;
        req.alpha = p.alpha;
        req.h = p.h;
        req.tuned = p.tuned;
        c.constants = resolve_constants(req, err);
      }
      cells.push_back(std::move(c));
    }
    if (cells.empty()) throw InputError("the filters select no cell of preset " + args.paper_table);
  } else {
    if (args.experiment.empty()) throw InputError("simulate needs --paper-table or --experiment");
    if (args.n == 0 || args.d == 0) throw InputError("--experiment needs --n and --d");
    Cell c;
    c.kind = experiment_kind_from_string(args.experiment);
    c.n = args.n;
    c.d = args.d;
    c.spec.kind = args.cov.empty() ? CovarianceKind::Identity : covariance_kind_from_string(args.cov);
    c.spec.d = args.d;
    c.spec.rotation_seed = args.rotation_seed;
    c.reps = args.reps > 0 ? args.reps : 1000;
    if (c.kind == ExperimentKind::Level) {
      c.radii = args.radii.empty() ? std::vector<double>{1.0} : args.radii;
      if (c.radii.size() != 1) throw InputError("a level experiment takes exactly one --radius");
    } else if (c.kind == ExperimentKind::Contamination) {
      c.radii = args.radii.empty() ? std::vector<double>{1.05, 1.25, 1.5, 2.0, 3.0} : args.radii;
    } else if (!args.radii.empty()) {
      throw InputError("a clean-sample experiment takes no --radius");
    }
    if (!args.constants_file.empty()) {
      c.constants = load_constants_file(args.constants_file);
    } else if (auto tab = args.req.alpha == 0.05 && args.req.delta == 0.05
                              ? tabulated_constants(args.n, args.d, args.req.h)
                              : std::nullopt) {
      c.constants = *tab;
    } else {
      ConstantsRequest req = args.req;
      req.n = args.n;
      req.d = args.d;
      c.constants = resolve_constants(req, err);
    }
    cells.push_back(std::move(c));
  }

  ExperimentOptions opts;
  opts.threads = args.req.threads;
  opts.force_direct = args.force_direct;

  const fs::path dir(args.output);
  std::vector<ExperimentReport> reports;
  Json summary;
  summary["seed"] = args.seed;
  summary["preset"] = args.paper_table.empty() ? Json(nullptr) : Json(args.paper_table);
  summary["scale"] = args.paper_table.empty() ? Json(nullptr) : Json(args.scale);
  Json files = Json::array();
  Json failures = Json::array();
  const auto start = Clock::now();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Cell& cell = cells[i];
    char name[32];
    std::snprintf(name, sizeof name, "cell_%03zu.json", i);
    const std::uint64_t cell_seed = sub_seed(args.seed, i);
    try {
      ExperimentReport r = run_cell(cell, cell_seed, opts);
      write_text_file(dir / name, to_json(r).dump(2) + "\n");
      files.push_back(name);
      reports.push_back(std::move(r));
    } catch (const std::exception& e) {
      err << "cell " << i << " (n=" << cell.n << ", d=" << cell.d << ", " << to_string(cell.spec.kind)
          << ") failed: " << e.what() << "\n";
      failures.push_back({{"cell", i}, {"n", cell.n}, {"d", cell.d}, {"covariance", to_string(cell.spec.kind)},
                          {"error", e.what()}});
    }
  }
  summary["cells"] = std::move(files);
  summary["failures"] = failures;
  write_text_file(dir / "summary.json", summary.dump(2) + "\n");

  std::string text;
  // Reports of different kinds render as separate blocks.
  for (ExperimentKind kind : {ExperimentKind::Level, ExperimentKind::Contamination, ExperimentKind::CleanSample}) {
    std::vector<ExperimentReport> block;
    for (const auto& r : reports) {
      if (r.scenario.kind == kind) block.push_back(r);
    }
    if (!block.empty()) text += render_table(block) + "\n";
  }
  write_text_file(dir / "table.txt", text);
  out << text;
  out << reports.size() << " cell(s) written to " << dir.string() << " in " << fixed(seconds_since(start), 1)
      << " s\n";
  return failures.empty() ? kExitOk : kExitFailure;
}

void add_constants_options(CLI::App& cmd, ConstantsRequest& req, bool with_size) {
  if (with_size) {
    cmd.add_option("--n", req.n, "Sample size")->required()->check(CLI::PositiveNumber);
    cmd.add_option("--d", req.d, "Dimension")->required()->check(CLI::PositiveNumber);
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Random-projection sequential outlier detection for Gaussian data", "rpod"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "rpod 1.0");

  int threads = available_threads();

  // calibrate
  CalibrateArgs cal;
  auto* calibrate = app.add_subcommand("calibrate", "Compute the decision constants (a, b)");
  add_constants_options(*calibrate, cal.req, true);
  calibrate->add_option("--alpha", cal.req.alpha, "Level at radius C_n^d")->capture_default_str();
  calibrate->add_option("--delta", cal.req.delta, "Outlier threshold level")->capture_default_str();
  calibrate->add_option("--target-projections", cal.req.h, "Target mean projections h")->capture_default_str();
  calibrate->add_option("--mc-size", cal.req.mc_size, "Score draws N")->capture_default_str();
  calibrate->add_option("--seed", cal.req.seed, "Master seed")->capture_default_str();
  calibrate->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  calibrate->add_option("--cache-dir", cal.req.cache_dir, "Calibration cache directory")->capture_default_str();
  calibrate->add_flag("--force", cal.req.force, "Recalibrate even on a cache hit");
  calibrate->add_option("--output", cal.output, "Write the calibration result as JSON");

  // detect
  DetectArgs det;
  auto* detect = app.add_subcommand("detect", "Flag outliers in a CSV dataset by T-run voting");
  detect->add_option("--input", det.input, "CSV file, rows = observations")->required();
  auto* cf = detect->add_option("--constants-file", det.constants_file, "JSON file with a, b, n, d");
  auto* tab = detect->add_flag("--tabulated", det.tabulated, "Use the built-in N=10^6 constants");
  auto* d_alpha = detect->add_option("--alpha", det.req.alpha, "Level for calibration and voting")->capture_default_str();
  auto* d_delta = detect->add_option("--delta", det.req.delta, "Outlier threshold level")->capture_default_str();
  auto* d_h = detect->add_option("--target-projections", det.req.h, "Target mean projections h")->capture_default_str();
  auto* d_mc = detect->add_option("--mc-size", det.req.mc_size, "Score draws N on a cache miss")->capture_default_str();
  auto* d_cs = detect->add_option("--calibration-seed", det.req.seed, "Seed of the calibration on a cache miss")
                   ->capture_default_str();
  auto* d_cache = detect->add_option("--cache-dir", det.req.cache_dir, "Calibration cache directory")
                      ->capture_default_str();
  auto* d_force = detect->add_flag("--force", det.req.force, "Recalibrate even on a cache hit");
  for (auto* opt : {d_alpha, d_delta, d_h, d_mc, d_cs, d_cache, d_force, tab}) cf->excludes(opt);
  for (auto* opt : {d_alpha, d_delta, d_mc, d_cs, d_cache, d_force}) tab->excludes(opt);
  detect->add_option("-T,--T", det.runs, "Number of voting runs")->capture_default_str()->check(CLI::PositiveNumber);
  detect->add_option("--vote-mode", det.mode, "Declaration rule")
      ->capture_default_str()
      ->check(CLI::IsMember({"proportional", "strengthened", "relaxed"}));
  detect->add_option("--seed", det.seed, "Master seed of the voting runs")->capture_default_str();
  detect->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  detect->add_option("--output", det.output, "Write the detection report as JSON");
  detect->add_flag("--leave-one-out", det.leave_one_out, "Exclude the scored point from the estimators");

  // simulate
  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run level, power and masking experiments");
  auto* preset = simulate->add_option("--paper-table", sim.paper_table, "Preset grid: 5, 6, 7 or masking");
  simulate->add_option("--scale", sim.scale, "Preset size")
      ->capture_default_str()
      ->check(CLI::IsMember({"desk", "full"}));
  auto* exp = simulate->add_option("--experiment", sim.experiment, "Custom run: level, contamination or clean");
  preset->excludes(exp);
  simulate->add_option("--n", sim.n, "Sample size (filters presets)");
  simulate->add_option("--d", sim.d, "Dimension (filters presets)");
  simulate->add_option("--cov", sim.cov, "Covariance family (filters presets)");
  auto* rot = simulate->add_option("--rotation-seed", sim.rotation_seed, "Random orthogonal basis for the covariance");
  auto* rad = simulate->add_option("--radius", sim.radii, "Radius multiplier(s) of C_n^d")->delimiter(',');
  rot->excludes(preset);
  rad->excludes(preset);
  simulate->add_option("--reps", sim.reps, "Replicates per cell (overrides the preset)");
  auto* s_cf = simulate->add_option("--constants-file", sim.constants_file, "JSON file with a, b, n, d");
  s_cf->excludes(preset);
  simulate->add_option("--alpha", sim.req.alpha, "Level of the constants")->capture_default_str();
  simulate->add_option("--delta", sim.req.delta, "Outlier threshold level")->capture_default_str();
  simulate->add_option("--target-projections", sim.req.h, "Target mean projections h")->capture_default_str();
  simulate->add_option("--mc-size", sim.req.mc_size, "Score draws N on a cache miss")->capture_default_str();
  simulate->add_option("--calibration-seed", sim.req.seed, "Seed of calibrations on a cache miss")
      ->capture_default_str();
  simulate->add_option("--cache-dir", sim.req.cache_dir, "Calibration cache directory")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Master seed")->capture_default_str();
  simulate->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  simulate->add_option("--output", sim.output, "Output directory")->capture_default_str();
  simulate->add_flag("--force-direct", sim.force_direct, "Materialize samples even for the identity");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (calibrate->parsed()) {
      cal.req.threads = threads;
      return cmd_calibrate(cal, out, err);
    }
    if (detect->parsed()) {
      det.req.threads = threads;
      return cmd_detect(det, out, err);
    }
    sim.req.threads = threads;
    return cmd_simulate(sim, out, err);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace rpod
