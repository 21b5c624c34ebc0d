#include "rpod/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "rpod/error.hpp"

namespace rpod {

SquareMatrix SquareMatrix::identity(std::size_t size) {
  SquareMatrix m(size);
  for (std::size_t i = 0; i < size; ++i) m(i, i) = 1.0;
  return m;
}

void SquareMatrix::apply(std::span<const double> x, std::span<double> out) const {
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = a.data() + i * n;
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += row[j] * x[j];
    out[i] = s;
  }
}

void SquareMatrix::apply_transpose(std::span<const double> x, std::span<double> out) const {
  std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(n), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = a.data() + i * n;
    const double xi = x[i];
    for (std::size_t j = 0; j < n; ++j) out[j] += row[j] * xi;
  }
}

SquareMatrix SquareMatrix::multiply(const SquareMatrix& other) const {
  SquareMatrix out(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      const double aik = (*this)(i, k);
      const double* brow = other.a.data() + k * n;
      double* orow = out.a.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

SquareMatrix SquareMatrix::transpose() const {
  SquareMatrix out(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out(j, i) = (*this)(i, j);
  return out;
}

SymmetricEigen jacobi_eigen(SquareMatrix m, double tol, int max_sweeps) {
  const std::size_t n = m.n;
  SquareMatrix v = SquareMatrix::identity(n);
  double total = 0.0;
  for (double x : m.a) total += x * x;
  const double target = tol * std::sqrt(total);

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * m(i, j) * m(i, j);
    return std::sqrt(s);
  };

  for (int sweep = 0; sweep < max_sweeps && off_norm() > target; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = m(p, q);
        if (apq == 0.0) continue;
        const double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = m(k, p);
          const double akq = m(k, q);
          m(k, p) = c * akp - s * akq;
          m(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = m(p, k);
          const double aqk = m(q, k);
          m(p, k) = c * apk - s * aqk;
          m(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return m(i, i) < m(j, j); });
  SymmetricEigen out{std::vector<double>(n), SquareMatrix(n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = m(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

SquareMatrix random_orthogonal(std::size_t d, Rng& rng) {
  // Columns of a Gaussian matrix, orthonormalized with two passes of
  // modified Gram-Schmidt.
  std::vector<std::vector<double>> cols(d, std::vector<double>(d));
  for (auto& c : cols)
    for (double& x : c) x = rng.normal();
  for (std::size_t k = 0; k < d; ++k) {
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < k; ++j) {
        double proj = 0.0;
        for (std::size_t i = 0; i < d; ++i) proj += cols[j][i] * cols[k][i];
        for (std::size_t i = 0; i < d; ++i) cols[k][i] -= proj * cols[j][i];
      }
    }
    double norm = 0.0;
    for (double x : cols[k]) norm += x * x;
    norm = std::sqrt(norm);
    if (!(norm > 0.0)) throw DomainError("random_orthogonal: rank-deficient draw");
    for (double& x : cols[k]) x /= norm;
  }
  SquareMatrix q(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k = 0; k < d; ++k) q(i, k) = cols[k][i];
  return q;
}

std::vector<double> solve(SquareMatrix m, std::vector<double> rhs) {
  const std::size_t n = m.n;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(m(r, col)) > std::fabs(m(piv, col))) piv = r;
    if (m(piv, col) == 0.0) throw DomainError("solve: singular matrix");
    if (piv != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(m(col, j), m(piv, j));
      std::swap(rhs[col], rhs[piv]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = m(r, col) / m(col, col);
      if (f == 0.0) continue;
      for (std::size_t j = col; j < n; ++j) m(r, j) -= f * m(col, j);
      rhs[r] -= f * rhs[col];
    }
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = rhs[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= m(i, j) * rhs[j];
    rhs[i] = s / m(i, i);
  }
  return rhs;
}

}  // namespace rpod
