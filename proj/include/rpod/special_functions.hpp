#pragma once

#include <cstdint>

namespace rpod {

/// Regularized lower incomplete gamma P(s, x) for s > 0, x >= 0.
double regularized_lower_gamma(double s, double x);

/// Regularized upper incomplete gamma Q(s, x) = 1 - P(s, x), evaluated
/// directly so that small upper tails keep their relative accuracy.
double regularized_upper_gamma(double s, double x);

/// Chi-squared cdf with `dof` degrees of freedom.
double chi2_cdf(double x, unsigned dof);

/// Inverse chi-squared cdf. Requires 0 <= p < 1 and dof >= 1; the result q
/// satisfies |P(dof/2, q/2) - p| <= 1e-10. Throws DomainError otherwise.
double chi2_quantile(double p, unsigned dof);

/// Inverse standard normal cdf on (0, 1), accurate to ~1e-15.
double normal_quantile(double p);

/// Standard normal cdf.
double normal_cdf(double x);

/// q3 = normal_quantile(0.75), the MAD consistency constant. Computed once.
double normal_q3();

/// Smallest k in [0, trials] with Binomial(trials, prob) cdf(k) >= q.
std::uint64_t binomial_quantile(std::uint64_t trials, double prob, double q);

}  // namespace rpod
