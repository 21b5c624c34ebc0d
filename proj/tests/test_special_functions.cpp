#include <doctest.h>

#include <cmath>
#include <cstdint>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "rpod/error.hpp"
#include "rpod/special_functions.hpp"

using namespace rpod;

TEST_CASE("chi2_quantile reference values") {
  CHECK(chi2_quantile(0.0, 7) == 0.0);
  CHECK(chi2_quantile(0.5, 2) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-10));
  // square of the 0.975 normal quantile
  const double z = boost::math::quantile(boost::math::normal(), 0.975);
  CHECK(chi2_quantile(0.95, 1) == doctest::Approx(z * z).epsilon(1e-9));
  CHECK(chi2_quantile(0.95, 1) == doctest::Approx(3.8414588206941254).epsilon(1e-9));
}

TEST_CASE("chi2_quantile inverts the regularized gamma") {
  for (unsigned d : {1u, 2u, 3u, 7u, 50u, 200u, 1000u, 10000u}) {
    for (double p : {1e-12, 1e-6, 0.01, 0.3, 0.5, 0.9, 0.999, 1 - 1e-6, 1 - 1e-9}) {
      const double q = chi2_quantile(p, d);
      const double back = boost::math::gamma_p(d / 2.0, q / 2.0);
      CHECK(std::fabs(back - p) <= 1e-9);
    }
  }
}

TEST_CASE("chi2_quantile is increasing in p and in d") {
  double prev = 0.0;
  for (int i = 1; i < 100; ++i) {
    const double q = chi2_quantile(i / 100.0, 10);
    CHECK(q > prev);
    prev = q;
  }
  for (double p : {0.1, 0.5, 0.99}) {
    double last = 0.0;
    for (unsigned d = 1; d < 60; ++d) {
      const double q = chi2_quantile(p, d);
      CHECK(q > last);
      last = q;
    }
  }
}

TEST_CASE("chi2_quantile rejects bad arguments") {
  CHECK_THROWS_AS(chi2_quantile(1.0, 3), DomainError);
  CHECK_THROWS_AS(chi2_quantile(-0.1, 3), DomainError);
  CHECK_THROWS_AS(chi2_quantile(0.5, 0), DomainError);
  CHECK_THROWS_AS(chi2_quantile(std::nan(""), 3), DomainError);
}

TEST_CASE("incomplete gamma matches boost") {
  for (double s : {0.5, 1.0, 2.5, 25.0, 500.0}) {
    for (double x : {1e-3, 0.5, 1.0, 3.0, 20.0, 300.0, 700.0}) {
      CHECK(regularized_lower_gamma(s, x) == doctest::Approx(boost::math::gamma_p(s, x)).epsilon(1e-11));
      const double q = boost::math::gamma_q(s, x);
      if (q > 1e-300) CHECK(regularized_upper_gamma(s, x) == doctest::Approx(q).epsilon(1e-9));
    }
  }
  CHECK(regularized_lower_gamma(3.0, 0.0) == 0.0);
}

TEST_CASE("normal quantile matches boost") {
  const boost::math::normal nd;
  for (double p : {1e-300, 1e-20, 1e-8, 0.001, 0.02425, 0.1, 0.5, 0.75, 0.97575, 0.999, 1 - 1e-12}) {
    const double ref = boost::math::quantile(nd, p);
    CHECK(normal_quantile(p) == doctest::Approx(ref).epsilon(1e-13));
  }
  CHECK(normal_q3() == doctest::Approx(0.6744897501960817).epsilon(1e-14));
  CHECK(normal_cdf(1.0) == doctest::Approx(boost::math::cdf(nd, 1.0)).epsilon(1e-14));
}

TEST_CASE("binomial quantile is the smallest k with cdf >= q") {
  CHECK(binomial_quantile(100, 0.05, 0.95) == 9);
  CHECK(binomial_quantile(100, 0.05, 0.05) == 2);
  for (std::uint64_t t : {1u, 10u, 40u, 100u, 1000u}) {
    for (double p : {0.01, 0.05, 0.3}) {
      const boost::math::binomial bd(static_cast<double>(t), p);
      for (double q : {0.05, 0.5, 0.95}) {
        std::uint64_t k = 0;
        while (boost::math::cdf(bd, static_cast<double>(k)) < q) ++k;
        CHECK(binomial_quantile(t, p, q) == k);
      }
    }
  }
}
