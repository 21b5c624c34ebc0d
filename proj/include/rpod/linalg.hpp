#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rpod/rng.hpp"

namespace rpod {

// Dense row-major square matrix; just enough linear algebra for covariance
// construction.
struct SquareMatrix {
  std::size_t n = 0;
  std::vector<double> a;

  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t size) : n(size), a(size * size, 0.0) {}
  static SquareMatrix identity(std::size_t size);

  double operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }
  double& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }

  // out = M x
  void apply(std::span<const double> x, std::span<double> out) const;
  // out = M' x
  void apply_transpose(std::span<const double> x, std::span<double> out) const;
  SquareMatrix multiply(const SquareMatrix& other) const;
  SquareMatrix transpose() const;
};

struct SymmetricEigen {
  std::vector<double> values;  // ascending
  SquareMatrix vectors;        // column k is the eigenvector for values[k]
};

/// Cyclic Jacobi eigensolver for symmetric matrices. Iterates until the
/// off-diagonal Frobenius norm is below `tol` times the matrix norm.
SymmetricEigen jacobi_eigen(SquareMatrix m, double tol = 1e-10, int max_sweeps = 100);

/// Haar-distributed orthogonal matrix (Gram-Schmidt on a Gaussian matrix).
SquareMatrix random_orthogonal(std::size_t d, Rng& rng);

/// Solves M x = rhs by Gaussian elimination with partial pivoting.
std::vector<double> solve(SquareMatrix m, std::vector<double> rhs);

}  // namespace rpod
