#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rpod/calibration.hpp"
#include "rpod/detector.hpp"
#include "rpod/experiments.hpp"
#include "rpod/stats_core.hpp"

namespace rpod {

using Json = nlohmann::ordered_json;

Json to_json(const DetectorConstants& c);
// Accepts either a bare constants object or one wrapping it under "constants".
DetectorConstants constants_from_json(const Json& j);
DetectorConstants load_constants_file(const std::filesystem::path& path);

Json to_json(const CalibrationResult& r);
Json to_json(const ExperimentReport& r);

// ---- calibration cache ------------------------------------------------------

struct CacheKey {
  std::size_t n = 0;
  std::size_t d = 0;
  double delta = 0.0;
  double alpha = 0.0;
  double h = 0.0;
  std::size_t mc_size = 0;
  std::uint64_t seed = 0;

  bool operator==(const CacheKey&) const = default;
};

struct CacheValue {
  double a = 0.0;
  double b = 0.0;
  double estimated_level = 0.0;
  double mean_projections = 0.0;
  std::string timestamp;
};

CacheKey cache_key(const CalibrationTarget& target, std::uint64_t seed);

// JSON array of {key, value} entries in <dir>/calibration_cache.json.
class CalibrationCache {
 public:
  explicit CalibrationCache(std::filesystem::path dir);

  const std::filesystem::path& file() const { return file_; }
  std::optional<CacheValue> lookup(const CacheKey& key) const;
  // Replaces any entry with the same key and rewrites the file. Throws Error on I/O failure.
  void store(const CacheKey& key, const CacheValue& value);
  std::size_t size() const { return entries_.size(); }

 private:
  std::filesystem::path dir_;
  std::filesystem::path file_;
  std::vector<std::pair<CacheKey, CacheValue>> entries_;
};

DetectorConstants constants_from_cache(const CacheKey& key, const CacheValue& value);

std::string utc_timestamp();

// ---- CSV input ----------------------------------------------------------------

struct CsvTable {
  DataMatrix data;
  std::vector<std::string> header;  // empty when the file has none
  std::uint64_t content_hash = 0;   // FNV-1a of the raw bytes
};

/// Rows are observations, columns coordinates, comma separated. The first
/// row is a header when any of its fields is not a number. Parsing is
/// locale independent. Throws InputError naming the offending row/column.
CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::filesystem::path& path);

std::uint64_t fnv1a64(const std::string& bytes);

// ---- detection report ----------------------------------------------------------

struct DetectionReport {
  std::size_t n = 0;
  std::size_t d = 0;
  std::uint64_t content_hash = 0;
  std::string input;
  DetectorConstants constants;
  VoteReport vote;
  std::uint64_t seed = 0;
  double seconds = 0.0;
};

Json to_json(const DetectionReport& r);
DetectionReport detection_report_from_json(const Json& j);

std::string hex64(std::uint64_t v);

// Writes `text` to `path`, creating parent directories. Throws Error on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace rpod
