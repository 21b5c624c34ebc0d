#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rpod/rng.hpp"

namespace rpod {

// Row-major n x d block of observations (rows) over d coordinates.
class DataMatrix {
 public:
  DataMatrix() = default;
  // Zero-filled matrix.
  DataMatrix(std::size_t rows, std::size_t cols);
  // Takes ownership of `values` (row-major). Throws DomainError on size
  // mismatch, empty shape or non-finite entries.
  DataMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  std::span<const double> row(std::size_t i) const { return {values_.data() + i * cols_, cols_}; }
  std::span<double> row(std::size_t i) { return {values_.data() + i * cols_, cols_}; }

  double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }

  std::span<const double> values() const { return values_; }

  DataMatrix select_rows(std::span<const std::size_t> indices) const;

  // Column-wise medians; the coordinate-wise robust centre.
  std::vector<double> column_medians() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// Unit vector in R^d.
class Direction {
 public:
  // Normalizes `components`; throws DomainError on the zero vector.
  explicit Direction(std::vector<double> components);

  std::size_t dim() const { return components_.size(); }
  std::span<const double> components() const { return components_; }
  double operator[](std::size_t i) const { return components_[i]; }

 private:
  std::vector<double> components_;
};

struct RobustLocationScale {
  double median = 0.0;
  double madn = 0.0;  // MAD / q3
};

struct Threshold {
  double c_nd = 0.0;
  std::size_t n = 0;
  std::size_t d = 0;
  double delta = 0.0;
};

struct ProjectionScore {
  double score = 0.0;  // (x.v - median) / madn
  RobustLocationScale robust;
};

/// Outlier radius C_n^d(delta): square root of the (1 - delta)^{1/n}
/// quantile of chi^2_d. Points of Mahalanobis norm above it are outliers
/// at level delta for a sample of size n.
Threshold threshold_cnd(std::size_t n, std::size_t d, double delta);

/// Uniform direction on the unit sphere of R^d (normalized Gaussian; zero
/// draws are redrawn).
Direction sample_unit_direction(Rng& rng, std::size_t d);

// Even lengths use the midpoint of the two central order statistics.
double median(std::span<const double> values);
double madn(std::span<const double> values);

/// Median and MADN of `values`, permuting it in place; `scratch` must have
/// the same length. This is the allocation-free form used by the kernels.
RobustLocationScale robust_location_scale_inplace(std::span<double> values, std::span<double> scratch);

RobustLocationScale robust_location_scale(std::span<const double> values);

double dot(std::span<const double> x, std::span<const double> y);

// out[i] = sample.row(i) . v
void project_rows(const DataMatrix& sample, std::span<const double> v, std::span<double> out);

/// Standardized projection score of `point` against `sample` along
/// `direction`. Throws DegenerateProjection when the projected sample has
/// zero MADN.
ProjectionScore project_scores(const DataMatrix& sample, std::span<const double> point,
                               const Direction& direction);

}  // namespace rpod
