#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rpod/cli.hpp"
#include "rpod/report_io.hpp"
#include "rpod/rng.hpp"
#include "rpod/stats_core.hpp"

using namespace rpod;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "rpod");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rpod_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// n x d standard-normal CSV with a header; row `gross` moved far out.
void write_dataset(const fs::path& p, std::size_t n, std::size_t d, std::size_t gross, bool constant_column) {
  Rng rng(77);
  std::ofstream out(p);
  for (std::size_t j = 0; j < d; ++j) out << (j ? "," : "") << "v" << j;
  out << "\n";
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      double x = rng.normal();
      if (i == gross) x += 10.0;
      if (constant_column && j == 0) x = 3.0;
      out << (j ? "," : "") << x;
    }
    out << "\n";
  }
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"frobnicate"}).code == kExitUsage);
  CHECK(run({"calibrate", "--n", "50", "--d", "50", "--target-projections", "0.5"}).code == kExitUsage);
  CHECK(run({"calibrate", "--d", "50"}).code == kExitUsage);
  CHECK(run({"simulate", "--paper-table", "8"}).code == kExitUsage);
  CHECK(run({"simulate", "--paper-table", "5", "--experiment", "level"}).code == kExitUsage);
  CHECK(run({"detect", "--input", "x.csv", "--constants-file", "c.json", "--mc-size", "10"}).code == kExitUsage);
  CHECK(run({"detect", "--input", "x.csv", "--vote-mode", "majority"}).code == kExitUsage);
  CHECK(run({"detect", "--input", "/nonexistent/x.csv", "--tabulated"}).code == kExitUsage);
  CHECK(run({"--help"}).code == kExitOk);
}

TEST_CASE("calibrate reuses the cache") {
  const fs::path dir = fresh_dir("calibrate");
  const std::vector<std::string> args{"calibrate", "--n", "20", "--d", "5", "--target-projections", "5",
                                      "--mc-size", "5000", "--seed", "3", "--threads", "1",
                                      "--cache-dir", dir.string(), "--output", (dir / "first.json").string()};
  const Run first = run(args);
  REQUIRE(first.code == kExitOk);
  CHECK(first.out.find("source: computed") != std::string::npos);
  const Run second = run(args);
  REQUIRE(second.code == kExitOk);
  CHECK(second.out.find("source: cache") != std::string::npos);
  const auto line = [](const std::string& s) { return s.substr(s.find("a = "), s.find('\n', s.find("a = ")) - s.find("a = ")); };
  CHECK(line(first.out) == line(second.out));
  const Json j = Json::parse(slurp(dir / "first.json"));
  CHECK(j["constants"]["provenance"]["seed"] == 3);
  CHECK(CalibrationCache(dir).size() == 1);
}

TEST_CASE("detect flags a gross outlier and writes a report") {
  const fs::path dir = fresh_dir("detect");
  write_dataset(dir / "data.csv", 50, 50, 12, true);
  const Run r = run({"detect", "--input", (dir / "data.csv").string(), "--tabulated", "--T", "20", "--seed", "5",
                     "--threads", "1", "--output", (dir / "report.json").string()});
  REQUIRE(r.code == kExitOk);
  const DetectionReport rep = detection_report_from_json(Json::parse(slurp(dir / "report.json")));
  CHECK(rep.n == 50);
  CHECK(rep.d == 50);
  CHECK(rep.seed == 5);
  CHECK(rep.vote.flags[12] >= 18);
  CHECK(std::find(rep.vote.declared.begin(), rep.vote.declared.end(), 12) != rep.vote.declared.end());
  CHECK(rep.vote.declared == declared_from_flags(rep.vote.flags, rep.vote.threshold));
  CHECK(rep.content_hash == fnv1a64(slurp(dir / "data.csv")));

  // constants for another design
  write_dataset(dir / "small.csv", 30, 50, 99, false);
  CHECK(run({"detect", "--input", (dir / "small.csv").string(), "--constants-file", (dir / "report.json").string()})
            .code == kExitUsage);
  std::ofstream(dir / "empty.csv").close();
  CHECK(run({"detect", "--input", (dir / "empty.csv").string(), "--tabulated"}).code == kExitUsage);
  {
    std::ofstream bad(dir / "bad.csv");
    bad << "1,2,3\n4,5,6\n7,oops,9\n";
  }
  const Run diag = run({"detect", "--input", (dir / "bad.csv").string(), "--tabulated"});
  CHECK(diag.code == kExitUsage);
  CHECK(diag.err.find("line 3, column 2") != std::string::npos);
}

TEST_CASE("simulate output is byte-identical across runs") {
  const fs::path a = fresh_dir("sim_a"), b = fresh_dir("sim_b");
  auto args = [](const fs::path& out) {
    return std::vector<std::string>{"simulate", "--experiment", "contamination", "--n", "50", "--d", "50",
                                    "--reps", "20", "--seed", "11", "--threads", "1", "--output", out.string()};
  };
  REQUIRE(run(args(a)).code == kExitOk);
  REQUIRE(run(args(b)).code == kExitOk);
  for (const char* f : {"cell_000.json", "summary.json", "table.txt"}) {
    CHECK(slurp(a / f) == slurp(b / f));
    CHECK_FALSE(slurp(a / f).empty());
  }
  const Json cell = Json::parse(slurp(a / "cell_000.json"));
  CHECK(cell["scenario"]["seed"].is_number_unsigned());
}

TEST_CASE("simulate presets filter cells") {
  const fs::path dir = fresh_dir("preset");
  const Run r = run({"simulate", "--paper-table", "6", "--d", "50", "--cov", "identity", "--reps", "100",
                     "--threads", "1", "--output", dir.string()});
  REQUIRE(r.code == kExitOk);
  const Json summary = Json::parse(slurp(dir / "summary.json"));
  CHECK(summary["cells"].size() == 4);
  CHECK(summary["failures"].empty());
  CHECK(run({"simulate", "--paper-table", "6", "--d", "77", "--output", dir.string()}).code == kExitUsage);
}
