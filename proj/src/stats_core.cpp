#include "rpod/stats_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rpod/error.hpp"
#include "rpod/special_functions.hpp"

namespace rpod {

DataMatrix::DataMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {
  if (rows == 0 || cols == 0) throw DomainError("DataMatrix: empty shape");
}

DataMatrix::DataMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (rows == 0 || cols == 0) throw DomainError("DataMatrix: empty shape");
  if (values_.size() != rows * cols) {
    throw DomainError("DataMatrix: expected " + std::to_string(rows * cols) + " values, got " +
                      std::to_string(values_.size()));
  }
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!std::isfinite(values_[k])) {
      throw DomainError("DataMatrix: non-finite entry at row " + std::to_string(k / cols) +
                        ", column " + std::to_string(k % cols));
    }
  }
}

DataMatrix DataMatrix::select_rows(std::span<const std::size_t> indices) const {
  std::vector<double> out;
  out.reserve(indices.size() * cols_);
  for (std::size_t i : indices) {
    if (i >= rows_) throw DomainError("select_rows: index out of range");
    auto r = row(i);
    out.insert(out.end(), r.begin(), r.end());
  }
  return DataMatrix(indices.size(), cols_, std::move(out));
}

std::vector<double> DataMatrix::column_medians() const {
  std::vector<double> out(cols_);
  std::vector<double> column(rows_);
  for (std::size_t j = 0; j < cols_; ++j) {
    for (std::size_t i = 0; i < rows_; ++i) column[i] = (*this)(i, j);
    out[j] = median(column);
  }
  return out;
}

Direction::Direction(std::vector<double> components) : components_(std::move(components)) {
  double norm2 = 0.0;
  for (double c : components_) norm2 += c * c;
  if (!(norm2 > 0.0) || !std::isfinite(norm2)) throw DomainError("Direction: zero or non-finite vector");
  // Division (not multiplication by the reciprocal) keeps d = 1 exactly at +-1.
  const double norm = std::sqrt(norm2);
  for (double& c : components_) c /= norm;
}

Threshold threshold_cnd(std::size_t n, std::size_t d, double delta) {
  if (n == 0 || d == 0) throw DomainError("threshold_cnd: n and d must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("threshold_cnd: delta must lie in (0, 1)");
  const double p = std::exp(std::log1p(-delta) / static_cast<double>(n));
  const double q = chi2_quantile(p, static_cast<unsigned>(d));
  return {std::sqrt(q), n, d, delta};
}

Direction sample_unit_direction(Rng& rng, std::size_t d) {
  if (d == 0) throw DomainError("sample_unit_direction: d must be positive");
  std::vector<double> v(d);
  for (;;) {
    double norm2 = 0.0;
    for (double& x : v) {
      x = rng.normal();
      norm2 += x * x;
    }
    if (norm2 > 0.0) break;
  }
  return Direction(std::move(v));
}

namespace {

double median_inplace(std::span<double> v) {
  const std::size_t n = v.size();
  const std::size_t mid = n / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace

RobustLocationScale robust_location_scale_inplace(std::span<double> values, std::span<double> scratch) {
  if (values.empty()) throw DomainError("robust estimators need at least one value");
  const double m = median_inplace(values);
  for (std::size_t i = 0; i < values.size(); ++i) scratch[i] = std::fabs(values[i] - m);
  const double mad = median_inplace(scratch.first(values.size()));
  return {m, mad / normal_q3()};
}

RobustLocationScale robust_location_scale(std::span<const double> values) {
  std::vector<double> copy(values.begin(), values.end());
  std::vector<double> scratch(values.size());
  return robust_location_scale_inplace(copy, scratch);
}

double median(std::span<const double> values) {
  if (values.empty()) throw DomainError("median of an empty list");
  std::vector<double> copy(values.begin(), values.end());
  return median_inplace(copy);
}

double madn(std::span<const double> values) { return robust_location_scale(values).madn; }

double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

void project_rows(const DataMatrix& sample, std::span<const double> v, std::span<double> out) {
  for (std::size_t i = 0; i < sample.rows(); ++i) out[i] = dot(sample.row(i), v);
}

ProjectionScore project_scores(const DataMatrix& sample, std::span<const double> point,
                               const Direction& direction) {
  if (point.size() != sample.cols() || direction.dim() != sample.cols()) {
    throw DomainError("project_scores: dimension mismatch");
  }
  std::vector<double> proj(sample.rows());
  std::vector<double> scratch(sample.rows());
  project_rows(sample, direction.components(), proj);
  const RobustLocationScale rls = robust_location_scale_inplace(proj, scratch);
  if (!(rls.madn > 0.0)) throw DegenerateProjection();
  return {(dot(point, direction.components()) - rls.median) / rls.madn, rls};
}

}  // namespace rpod
