#include "rpod/report_io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "rpod/error.hpp"

namespace rpod {

namespace fs = std::filesystem;

Json to_json(const DetectorConstants& c) {
  Json j;
  j["a"] = c.a;
  j["b"] = c.b;
  j["n"] = c.n;
  j["d"] = c.d;
  j["alpha"] = c.alpha;
  j["delta"] = c.delta;
  j["h"] = c.h;
  Json p;
  p["source"] = c.provenance.source;
  p["mc_size"] = c.provenance.mc_size;
  p["seed"] = c.provenance.seed;
  p["estimated_level"] = c.provenance.estimated_level;
  p["estimated_mean_projections"] = c.provenance.estimated_mean_projections;
  j["provenance"] = std::move(p);
  return j;
}

DetectorConstants constants_from_json(const Json& in) {
  const Json& j = in.contains("constants") ? in.at("constants") : in;
  try {
    DetectorConstants c;
    c.a = j.at("a").get<double>();
    c.b = j.at("b").get<double>();
    c.n = j.at("n").get<std::size_t>();
    c.d = j.at("d").get<std::size_t>();
    c.alpha = j.value("alpha", 0.05);
    c.delta = j.value("delta", 0.05);
    c.h = j.value("h", 50.0);
    c.provenance.source = "user";
    if (j.contains("provenance")) {
      const Json& p = j.at("provenance");
      c.provenance.source = p.value("source", std::string("user"));
      c.provenance.mc_size = p.value("mc_size", std::uint64_t{0});
      c.provenance.seed = p.value("seed", std::uint64_t{0});
      c.provenance.estimated_level = p.value("estimated_level", -1.0);
      c.provenance.estimated_mean_projections = p.value("estimated_mean_projections", -1.0);
    }
    c.validate();
    return c;
  } catch (const Json::exception& e) {
    throw InputError(std::string("constants: ") + e.what());
  } catch (const DomainError& e) {
    throw InputError(std::string("constants: ") + e.what());
  }
}

DetectorConstants load_constants_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open constants file " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InputError("constants file " + path.string() + ": " + e.what());
  }
  return constants_from_json(j);
}

Json to_json(const CalibrationResult& r) {
  Json j;
  j["constants"] = to_json(r.constants);
  j["radius"] = r.radius;
  j["initial_b"] = r.initial_b;
  j["estimated_level"] = r.estimated_level;
  j["estimated_mean_projections"] = r.estimated_mean_projections;
  j["bisection_iterations"] = r.bisection_iterations;
  Json trace = Json::array();
  for (const auto& s : r.trace) {
    trace.push_back({{"b_lo", s.b_lo}, {"b_hi", s.b_hi}, {"b", s.b}, {"level", s.level},
                     {"mean_projections", s.mean_projections}});
  }
  j["trace"] = std::move(trace);
  return j;
}

Json to_json(const ExperimentReport& r) {
  const auto& s = r.scenario;
  Json sc;
  sc["kind"] = to_string(s.kind);
  sc["n"] = s.n;
  sc["d"] = s.d;
  sc["covariance"] = s.covariance.describe();
  sc["radii"] = s.radii;
  sc["reps"] = s.reps;
  sc["constants_id"] = s.constants_id;
  sc["constants"] = to_json(s.constants);
  sc["seed"] = s.seed;
  Json j;
  j["scenario"] = std::move(sc);
  j["engine"] = r.engine;
  j["completed"] = r.completed;
  j["failed"] = r.failed;
  j["capped"] = r.capped;
  j["rejection_proportion"] = r.rejection_proportion;
  j["mean_projections"] = r.mean_projections;
  Json per = Json::array();
  for (const auto& pr : r.per_radius) {
    per.push_back({{"radius", pr.radius}, {"planted", pr.planted}, {"detected", pr.detected},
                   {"proportion", pr.proportion}});
  }
  j["per_radius"] = std::move(per);
  j["clean_points"] = r.clean_points;
  j["clean_flagged"] = r.clean_flagged;
  j["swamping_proportion"] = r.swamping_proportion;
  return j;
}

// ---- calibration cache ------------------------------------------------------

CacheKey cache_key(const CalibrationTarget& target, std::uint64_t seed) {
  return {target.n, target.d, target.delta, target.alpha, target.h, target.mc_size, seed};
}

namespace {

Json key_json(const CacheKey& k) {
  return {{"n", k.n}, {"d", k.d}, {"delta", k.delta}, {"alpha", k.alpha},
          {"h", k.h}, {"N", k.mc_size}, {"seed", k.seed}};
}

CacheKey key_from_json(const Json& j) {
  return {j.at("n").get<std::size_t>(), j.at("d").get<std::size_t>(), j.at("delta").get<double>(),
          j.at("alpha").get<double>(), j.at("h").get<double>(), j.at("N").get<std::size_t>(),
          j.at("seed").get<std::uint64_t>()};
}

}  // namespace

CalibrationCache::CalibrationCache(fs::path dir) : dir_(std::move(dir)), file_(dir_ / "calibration_cache.json") {
  std::error_code ec;
  if (!fs::exists(file_, ec)) return;
  std::ifstream in(file_);
  if (!in) throw Error("cannot read calibration cache " + file_.string());
  try {
    const Json j = Json::parse(in);
    if (!j.is_array()) throw Error("calibration cache " + file_.string() + " is not a JSON array");
    for (const auto& e : j) {
      const Json& v = e.at("value");
      entries_.emplace_back(key_from_json(e.at("key")),
                            CacheValue{v.at("a").get<double>(), v.at("b").get<double>(),
                                       v.at("estimated_level").get<double>(),
                                       v.at("mean_projections").get<double>(),
                                       v.value("timestamp", std::string())});
    }
  } catch (const Json::exception& e) {
    throw Error("calibration cache " + file_.string() + " is malformed: " + e.what());
  }
}

std::optional<CacheValue> CalibrationCache::lookup(const CacheKey& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  return std::nullopt;
}

void CalibrationCache::store(const CacheKey& key, const CacheValue& value) {
  bool replaced = false;
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = value;
      replaced = true;
    }
  }
  if (!replaced) entries_.emplace_back(key, value);

  Json arr = Json::array();
  for (const auto& [k, v] : entries_) {
    arr.push_back({{"key", key_json(k)},
                   {"value",
                    {{"a", v.a}, {"b", v.b}, {"estimated_level", v.estimated_level},
                     {"mean_projections", v.mean_projections}, {"timestamp", v.timestamp}}}});
  }
  // Write to a sibling file and rename so a crash never leaves a truncated cache.
  const fs::path tmp = file_.string() + ".tmp";
  write_text_file(tmp, arr.dump(2) + "\n");
  std::error_code ec;
  fs::rename(tmp, file_, ec);
  if (ec) throw Error("cannot write calibration cache " + file_.string() + ": " + ec.message());
}

DetectorConstants constants_from_cache(const CacheKey& key, const CacheValue& value) {
  DetectorConstants c;
  c.a = value.a;
  c.b = value.b;
  c.n = key.n;
  c.d = key.d;
  c.alpha = key.alpha;
  c.delta = key.delta;
  c.h = key.h;
  c.provenance.source = "calibrated";
  c.provenance.mc_size = key.mc_size;
  c.provenance.seed = key.seed;
  c.provenance.estimated_level = value.estimated_level;
  c.provenance.estimated_mean_projections = value.mean_projections;
  return c;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---- CSV ------------------------------------------------------------------------

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::optional<double> parse_number(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

CsvTable parse_csv(const std::string& text) {
  std::vector<std::string_view> lines;
  {
    std::string_view rest(text);
    while (!rest.empty()) {
      const std::size_t nl = rest.find('\n');
      lines.push_back(rest.substr(0, nl));
      if (nl == std::string_view::npos) break;
      rest.remove_prefix(nl + 1);
    }
  }
  CsvTable table;
  table.content_hash = fnv1a64(text);
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  bool first = true;
  for (std::size_t li = 0; li < lines.size(); ++li) {
    if (trim(lines[li]).empty()) continue;
    const auto fields = split_fields(lines[li]);
    const std::size_t line_no = li + 1;
    if (first) {
      first = false;
      cols = fields.size();
      bool numeric = true;
      for (auto f : fields) numeric = numeric && parse_number(f).has_value();
      if (!numeric) {
        for (auto f : fields) table.header.emplace_back(f);
        continue;
      }
    }
    if (fields.size() != cols) {
      throw InputError("CSV line " + std::to_string(line_no) + ": expected " + std::to_string(cols) +
                       " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const auto v = parse_number(fields[c]);
      if (!v || !std::isfinite(*v)) {
        throw InputError("CSV line " + std::to_string(line_no) + ", column " + std::to_string(c + 1) +
                         ": not a finite number: '" + std::string(fields[c]) + "'");
      }
      values.push_back(*v);
    }
    ++rows;
  }
  if (rows == 0) throw InputError("CSV contains no data rows");
  table.data = DataMatrix(rows, cols, std::move(values));
  return table;
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open input " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

// ---- detection report --------------------------------------------------------------

Json to_json(const DetectionReport& r) {
  Json j;
  j["dataset"] = {{"input", r.input}, {"n", r.n}, {"d", r.d}, {"content_hash", hex64(r.content_hash)}};
  j["constants"] = to_json(r.constants);
  Json v;
  v["runs"] = r.vote.runs;
  v["mode"] = to_string(r.vote.mode);
  v["threshold"] = r.vote.threshold;
  v["flags"] = r.vote.flags;
  Json prop = Json::array();
  for (std::size_t f : r.vote.flags) {
    prop.push_back(r.vote.runs > 0 ? static_cast<double>(f) / static_cast<double>(r.vote.runs) : 0.0);
  }
  v["proportions"] = std::move(prop);
  v["declared"] = r.vote.declared;
  j["vote"] = std::move(v);
  j["seed"] = r.seed;
  j["timing"] = {{"seconds", r.seconds}};
  return j;
}

DetectionReport detection_report_from_json(const Json& j) {
  try {
    DetectionReport r;
    const Json& ds = j.at("dataset");
    r.input = ds.value("input", std::string());
    r.n = ds.at("n").get<std::size_t>();
    r.d = ds.at("d").get<std::size_t>();
    r.content_hash = std::stoull(ds.at("content_hash").get<std::string>(), nullptr, 16);
    r.constants = constants_from_json(j.at("constants"));
    const Json& v = j.at("vote");
    r.vote.runs = v.at("runs").get<std::size_t>();
    r.vote.mode = vote_mode_from_string(v.at("mode").get<std::string>());
    r.vote.threshold = v.at("threshold").get<double>();
    r.vote.flags = v.at("flags").get<std::vector<std::size_t>>();
    r.vote.declared = v.at("declared").get<std::vector<std::size_t>>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.seconds = j.at("timing").value("seconds", 0.0);
    return r;
  } catch (const Json::exception& e) {
    throw InputError(std::string("detection report: ") + e.what());
  }
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw Error("write to " + path.string() + " failed");
}

}  // namespace rpod
