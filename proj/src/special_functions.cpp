#include "rpod/special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rpod/error.hpp"

namespace rpod {
namespace {

constexpr int kMaxIter = 10000;
constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;

// log of x^s e^{-x} / Gamma(s)
double log_prefactor(double s, double x) { return s * std::log(x) - x - std::lgamma(s); }

// Power series for P(s, x); converges quickly for x < s + 1.
double gamma_series(double s, double x) {
  double ap = s;
  double del = 1.0 / s;
  double sum = del;
  for (int i = 0; i < kMaxIter; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * kEps) break;
  }
  return sum * std::exp(log_prefactor(s, x));
}

// Modified Lentz continued fraction for Q(s, x); used for x >= s + 1.
double gamma_continued_fraction(double s, double x) {
  double b = x + 1.0 - s;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - s);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return std::exp(log_prefactor(s, x)) * h;
}

void check_gamma_args(double s, double x) {
  if (!(s > 0.0) || !(x >= 0.0) || !std::isfinite(s)) {
    throw DomainError("incomplete gamma requires s > 0 and x >= 0");
  }
}

}  // namespace

double regularized_lower_gamma(double s, double x) {
  check_gamma_args(s, x);
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < s + 1.0) return gamma_series(s, x);
  return 1.0 - gamma_continued_fraction(s, x);
}

double regularized_upper_gamma(double s, double x) {
  check_gamma_args(s, x);
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < s + 1.0) return 1.0 - gamma_series(s, x);
  return gamma_continued_fraction(s, x);
}

double chi2_cdf(double x, unsigned dof) {
  if (dof == 0) throw DomainError("chi-squared needs dof >= 1");
  if (x <= 0.0) return 0.0;
  return regularized_lower_gamma(0.5 * dof, 0.5 * x);
}

double chi2_quantile(double p, unsigned dof) {
  if (dof == 0) throw DomainError("chi2_quantile: dof must be >= 1");
  if (!(p >= 0.0 && p < 1.0)) throw DomainError("chi2_quantile: p must lie in [0, 1)");
  if (p == 0.0) return 0.0;

  const double s = 0.5 * dof;
  const bool upper = p > 0.5;
  const double tail = 1.0 - p;
  // Signed residual, increasing in x. The upper tail is compared directly
  // when p is large so that (1 - p) keeps its digits.
  auto residual = [&](double x) {
    return upper ? tail - regularized_upper_gamma(s, 0.5 * x)
                 : regularized_lower_gamma(s, 0.5 * x) - p;
  };
  auto density = [&](double x) {
    return std::exp((s - 1.0) * std::log(x) - 0.5 * x - s * std::log(2.0) - std::lgamma(s));
  };

  double lo = 0.0;
  double hi = std::max(1.0, static_cast<double>(dof));
  while (residual(hi) < 0.0) {
    lo = hi;
    hi *= 2.0;
  }

  // Wilson-Hilferty start, clamped into the bracket.
  const double z = normal_quantile(p);
  const double k = static_cast<double>(dof);
  const double wh = k * std::pow(1.0 - 2.0 / (9.0 * k) + z * std::sqrt(2.0 / (9.0 * k)), 3);
  double x = (wh > lo && wh < hi) ? wh : 0.5 * (lo + hi);

  for (int iter = 0; iter < 400; ++iter) {
    const double f = residual(x);
    if (std::fabs(f) <= 1e-14) return x;
    if (f < 0.0) lo = x; else hi = x;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) return x;
    const double dens = density(x);
    double next = (dens > 0.0 && std::isfinite(dens)) ? x - f / dens : lo;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    x = next;
  }
  return x;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_quantile: p must lie in (0, 1)");
  // Acklam's rational approximation followed by Halley refinement.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  for (int i = 0; i < 3; ++i) {
    // e = Phi(x) - p, taken from the smaller tail to avoid cancellation.
    const double e = (x < 0.0) ? 0.5 * std::erfc(-x / std::sqrt(2.0)) - p
                               : (1.0 - p) - 0.5 * std::erfc(x / std::sqrt(2.0));
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
  }
  return x;
}

double normal_q3() {
  static const double q3 = normal_quantile(0.75);
  return q3;
}

std::uint64_t binomial_quantile(std::uint64_t trials, double prob, double q) {
  if (!(prob >= 0.0 && prob <= 1.0)) throw DomainError("binomial_quantile: prob outside [0, 1]");
  if (!(q >= 0.0 && q <= 1.0)) throw DomainError("binomial_quantile: q outside [0, 1]");
  if (prob == 0.0) return 0;
  if (prob == 1.0) return trials;
  const double n = static_cast<double>(trials);
  const double lp = std::log(prob);
  const double lq = std::log1p(-prob);
  double cdf = 0.0;
  for (std::uint64_t k = 0; k <= trials; ++k) {
    const double kk = static_cast<double>(k);
    const double log_pmf =
        std::lgamma(n + 1.0) - std::lgamma(kk + 1.0) - std::lgamma(n - kk + 1.0) + kk * lp + (n - kk) * lq;
    cdf += std::exp(log_pmf);
    // Guard against accumulated rounding right at the boundary.
    if (cdf >= q * (1.0 - 1e-12)) return k;
  }
  return trials;
}

}  // namespace rpod
