#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rpod/linalg.hpp"
#include "rpod/rng.hpp"
#include "rpod/stats_core.hpp"

namespace rpod {

enum class CovarianceKind {
  Identity,
  Sigma1,       // floor(d/2) eigenvalues 1, the rest d^2
  Sigma2,       // equally spaced from 1 to d^2
  Sigma3,       // d-1 ones and a single d^2
  Sigma4,       // ratio of equispaced sequences, values in [1, 2]
  ExpDecay,     // (exp(-|i-j|/d))_{ij}
  RandomGram,   // A'A, A with iid N(0,1) entries, redrawn per build
  CustomEigen,  // caller-supplied eigenvalues
};

std::string to_string(CovarianceKind kind);
CovarianceKind covariance_kind_from_string(const std::string& name);

struct CovarianceSpec {
  CovarianceKind kind = CovarianceKind::Identity;
  std::size_t d = 2;
  std::optional<std::uint64_t> rotation_seed;  // random orthogonal basis when set
  std::vector<double> custom_eigenvalues;

  std::string describe() const;
};

// A realized covariance Sigma = L L', stored either spectrally
// (L = B diag(sqrt(lambda)), B possibly the identity) or, for RandomGram, as a
// dense factor L = A'. Only the factor is needed for sampling.
class CovarianceModel {
 public:
  static CovarianceModel spectral(std::vector<double> eigenvalues, std::optional<SquareMatrix> basis);
  static CovarianceModel from_factor(SquareMatrix factor);

  std::size_t dim() const { return dim_; }
  bool is_identity() const;
  bool is_diagonal() const { return !basis_ && !factor_; }

  // Eigenvalues in storage order. For factor-form models they are computed
  // with the Jacobi solver on first use of spectrum().
  const std::vector<double>& eigenvalues() const { return eigenvalues_; }
  std::vector<double> spectrum() const;
  const std::optional<SquareMatrix>& basis() const { return basis_; }

  // out = L w
  void apply_root(std::span<const double> w, std::span<double> out) const;
  // || L^{-1} x ||
  double mahalanobis_norm(std::span<const double> x) const;

  // Left-multiplies the basis (or factor) by an orthogonal matrix.
  void rotate(const SquareMatrix& q);

 private:
  std::size_t dim_ = 0;
  std::vector<double> eigenvalues_;
  std::vector<double> scales_;
  std::optional<SquareMatrix> basis_;
  std::optional<SquareMatrix> factor_;
};

/// Eigenvalues of the fixed families (everything except RandomGram).
std::vector<double> family_eigenvalues(const CovarianceSpec& spec);

/// Realizes `spec`. RandomGram needs a random stream and is rejected here.
CovarianceModel build_covariance(const CovarianceSpec& spec);
CovarianceModel build_covariance(const CovarianceSpec& spec, Rng& rng);

/// n iid N_d(0, Sigma) rows, x = L z.
DataMatrix sample_gaussian(std::size_t n, const CovarianceModel& model, Rng& rng);

/// Point with Mahalanobis norm exactly t, uniformly distributed on that
/// ellipsoid's pre-image sphere: x = L (t z / ||z||).
std::vector<double> sample_on_mahalanobis_sphere(const CovarianceModel& model, double t, Rng& rng);

}  // namespace rpod
