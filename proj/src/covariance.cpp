#include "rpod/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rpod/error.hpp"

namespace rpod {

std::string to_string(CovarianceKind kind) {
  switch (kind) {
    case CovarianceKind::Identity: return "identity";
    case CovarianceKind::Sigma1: return "sigma1";
    case CovarianceKind::Sigma2: return "sigma2";
    case CovarianceKind::Sigma3: return "sigma3";
    case CovarianceKind::Sigma4: return "sigma4";
    case CovarianceKind::ExpDecay: return "expdecay";
    case CovarianceKind::RandomGram: return "randomgram";
    case CovarianceKind::CustomEigen: return "custom";
  }
  return "unknown";
}

CovarianceKind covariance_kind_from_string(const std::string& name) {
  for (auto k : {CovarianceKind::Identity, CovarianceKind::Sigma1, CovarianceKind::Sigma2,
                 CovarianceKind::Sigma3, CovarianceKind::Sigma4, CovarianceKind::ExpDecay,
                 CovarianceKind::RandomGram, CovarianceKind::CustomEigen}) {
    if (to_string(k) == name) return k;
  }
  if (name == "I" || name == "id") return CovarianceKind::Identity;
  if (name == "S2") return CovarianceKind::ExpDecay;
  if (name == "S3") return CovarianceKind::RandomGram;
  throw InputError("unknown covariance kind '" + name + "'");
}

std::string CovarianceSpec::describe() const {
  std::ostringstream os;
  os << to_string(kind) << "(d=" << d;
  if (rotation_seed) os << ", rotated seed=" << *rotation_seed;
  os << ")";
  return os.str();
}

CovarianceModel CovarianceModel::spectral(std::vector<double> eigenvalues, std::optional<SquareMatrix> basis) {
  CovarianceModel m;
  m.dim_ = eigenvalues.size();
  if (m.dim_ == 0) throw DomainError("covariance: empty spectrum");
  for (double l : eigenvalues) {
    if (!(l > 0.0) || !std::isfinite(l)) throw DomainError("covariance: eigenvalues must be positive");
  }
  if (basis && basis->n != m.dim_) throw DomainError("covariance: basis size mismatch");
  m.scales_.resize(m.dim_);
  for (std::size_t i = 0; i < m.dim_; ++i) m.scales_[i] = std::sqrt(eigenvalues[i]);
  m.eigenvalues_ = std::move(eigenvalues);
  m.basis_ = std::move(basis);
  return m;
}

CovarianceModel CovarianceModel::from_factor(SquareMatrix factor) {
  CovarianceModel m;
  m.dim_ = factor.n;
  m.factor_ = std::move(factor);
  return m;
}

bool CovarianceModel::is_identity() const {
  if (factor_ || basis_) return false;
  return std::all_of(eigenvalues_.begin(), eigenvalues_.end(), [](double l) { return l == 1.0; });
}

std::vector<double> CovarianceModel::spectrum() const {
  if (!factor_) return eigenvalues_;
  const SquareMatrix sigma = factor_->multiply(factor_->transpose());
  return jacobi_eigen(sigma).values;
}

void CovarianceModel::apply_root(std::span<const double> w, std::span<double> out) const {
  if (factor_) {
    factor_->apply(w, out);
    return;
  }
  if (!basis_) {
    for (std::size_t i = 0; i < dim_; ++i) out[i] = scales_[i] * w[i];
    return;
  }
  std::vector<double> scaled(dim_);
  for (std::size_t i = 0; i < dim_; ++i) scaled[i] = scales_[i] * w[i];
  basis_->apply(scaled, out);
}

double CovarianceModel::mahalanobis_norm(std::span<const double> x) const {
  std::vector<double> w(dim_);
  if (factor_) {
    w = solve(*factor_, std::vector<double>(x.begin(), x.end()));
  } else {
    if (basis_) {
      basis_->apply_transpose(x, w);
    } else {
      std::copy(x.begin(), x.end(), w.begin());
    }
    for (std::size_t i = 0; i < dim_; ++i) w[i] /= scales_[i];
  }
  double s = 0.0;
  for (double v : w) s += v * v;
  return std::sqrt(s);
}

void CovarianceModel::rotate(const SquareMatrix& q) {
  if (q.n != dim_) throw DomainError("rotate: size mismatch");
  if (factor_) {
    factor_ = q.multiply(*factor_);
  } else if (basis_) {
    basis_ = q.multiply(*basis_);
  } else {
    basis_ = q;
  }
}

std::vector<double> family_eigenvalues(const CovarianceSpec& spec) {
  const std::size_t d = spec.d;
  const double dd = static_cast<double>(d);
  const double d2 = dd * dd;
  std::vector<double> ev(d, 1.0);
  switch (spec.kind) {
    case CovarianceKind::Identity:
      break;
    case CovarianceKind::Sigma1:
      for (std::size_t i = d / 2; i < d; ++i) ev[i] = d2;
      break;
    case CovarianceKind::Sigma2:
      for (std::size_t i = 0; i < d; ++i) ev[i] = 1.0 + (d2 - 1.0) * static_cast<double>(i) / (dd - 1.0);
      ev[d - 1] = d2;
      break;
    case CovarianceKind::Sigma3:
      ev[d - 1] = d2;
      break;
    case CovarianceKind::Sigma4:
      for (std::size_t i = 0; i < d; ++i) {
        const double frac = static_cast<double>(i) / (dd - 1.0);
        const double num = d2 + (2.0 - d2) * frac;
        const double den = d2 + (1.0 - d2) * frac;
        ev[i] = num / den;
      }
      ev[0] = 1.0;
      break;
    case CovarianceKind::ExpDecay: {
      SquareMatrix s(d);
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
          s(i, j) = std::exp(-std::fabs(static_cast<double>(i) - static_cast<double>(j)) / dd);
      ev = jacobi_eigen(std::move(s)).values;
      break;
    }
    case CovarianceKind::CustomEigen:
      if (spec.custom_eigenvalues.size() != d) throw DomainError("custom covariance: need d eigenvalues");
      for (double l : spec.custom_eigenvalues) {
        if (!(l > 0.0)) throw DomainError("custom covariance: eigenvalues must be positive");
      }
      ev = spec.custom_eigenvalues;
      break;
    case CovarianceKind::RandomGram:
      throw DomainError("random Gram covariance has no fixed spectrum");
  }
  return ev;
}

namespace {

CovarianceModel build_fixed(const CovarianceSpec& spec) {
  if (spec.kind == CovarianceKind::ExpDecay) {
    const std::size_t d = spec.d;
    SquareMatrix s(d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        s(i, j) = std::exp(-std::fabs(static_cast<double>(i) - static_cast<double>(j)) / static_cast<double>(d));
    SymmetricEigen eig = jacobi_eigen(std::move(s));
    return CovarianceModel::spectral(std::move(eig.values), std::move(eig.vectors));
  }
  return CovarianceModel::spectral(family_eigenvalues(spec), std::nullopt);
}

void apply_rotation(const CovarianceSpec& spec, CovarianceModel& model) {
  if (!spec.rotation_seed) return;
  Rng rot(*spec.rotation_seed);
  model.rotate(random_orthogonal(spec.d, rot));
}

}  // namespace

CovarianceModel build_covariance(const CovarianceSpec& spec) {
  if (spec.d < 2) throw DomainError("build_covariance: d must be >= 2");
  if (spec.kind == CovarianceKind::RandomGram) {
    throw DomainError("build_covariance: random Gram covariance needs a random stream");
  }
  CovarianceModel model = build_fixed(spec);
  apply_rotation(spec, model);
  return model;
}

CovarianceModel build_covariance(const CovarianceSpec& spec, Rng& rng) {
  if (spec.kind != CovarianceKind::RandomGram) return build_covariance(spec);
  if (spec.d < 2) throw DomainError("build_covariance: d must be >= 2");
  const std::size_t d = spec.d;
  // Sigma = A'A = L L' with L = A'.
  SquareMatrix a(d);
  for (double& x : a.a) x = rng.normal();
  CovarianceModel model = CovarianceModel::from_factor(a.transpose());
  apply_rotation(spec, model);
  return model;
}

DataMatrix sample_gaussian(std::size_t n, const CovarianceModel& model, Rng& rng) {
  const std::size_t d = model.dim();
  std::vector<double> values(n * d);
  std::vector<double> z(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& x : z) x = rng.normal();
    model.apply_root(z, std::span<double>(values.data() + i * d, d));
  }
  return DataMatrix(n, d, std::move(values));
}

std::vector<double> sample_on_mahalanobis_sphere(const CovarianceModel& model, double t, Rng& rng) {
  if (!(t > 0.0)) throw DomainError("sample_on_mahalanobis_sphere: t must be positive");
  const Direction u = sample_unit_direction(rng, model.dim());
  std::vector<double> w(u.components().begin(), u.components().end());
  for (double& x : w) x *= t;
  std::vector<double> out(model.dim());
  model.apply_root(w, out);
  return out;
}

}  // namespace rpod
