#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "rpod/calibration.hpp"
#include "rpod/error.hpp"
#include "rpod/stats_core.hpp"

using namespace rpod;

TEST_CASE("initial quantile levels") {
  auto [u50, v50] = initial_quantile_levels(0.05, 50);
  CHECK(u50 == doctest::Approx(0.019));
  CHECK(v50 == doctest::Approx(0.999));
  auto [u100, v100] = initial_quantile_levels(0.05, 100);
  CHECK(u100 == doctest::Approx(0.0095));
  CHECK(v100 == doctest::Approx(0.9995));
  CHECK_THROWS_AS(initial_quantile_levels(0.05, 0.5), DomainError);

  const std::vector<double> s{0.1, 0.2, 0.4, 0.8, 1.6};
  const auto [a1, b1] = initial_ab(s, 0.05, 1.0);
  CHECK(a1 == b1);
  CHECK(a1 == doctest::Approx(0.8 + 0.8 * 0.8));
  for (double h : {1.0, 2.0, 50.0, 1000.0}) {
    for (double alpha : {0.01, 0.05, 0.5}) {
      const auto [a, b] = initial_ab(s, alpha, h);
      CHECK(a <= b);
      CHECK(a >= s.front());
      CHECK(b <= s.back());
    }
  }
}

TEST_CASE("empirical quantile interpolates order statistics") {
  const std::vector<double> s{1, 2, 4, 8};
  CHECK(empirical_quantile(s, 0.0) == 1.0);
  CHECK(empirical_quantile(s, 1.0) == 8.0);
  CHECK(empirical_quantile(s, 0.5) == doctest::Approx(3.0));
  CHECK(empirical_quantile(s, 1.0 / 3.0) == doctest::Approx(2.0));
  CHECK_THROWS_AS(empirical_quantile(std::vector<double>{}, 0.5), DomainError);
  CHECK_THROWS_AS(empirical_quantile(s, 1.5), DomainError);
}

TEST_CASE("identity-case projection moments") {
  const auto m0 = expected_projections_identity(0.3, 0.3);
  CHECK(m0.mean == 1.0);
  CHECK(m0.variance == 0.0);
  const auto m = expected_projections_identity(0.01, 0.99);
  CHECK(m.mean == doctest::Approx(50.0));
  CHECK(m.variance == doctest::Approx(2450.0));
  CHECK_THROWS_AS(expected_projections_identity(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(expected_projections_identity(0.5, 0.4), DomainError);
}

TEST_CASE("score quantiles at the calibration radius") {
  const std::size_t n = 50, d = 50;
  const double t = threshold_cnd(n, d, 0.05).c_nd;
  std::vector<double> s = simulate_scores(n, d, t, 1000000, 2718, 1);
  CHECK(*std::min_element(s.begin(), s.end()) >= 0.0);
  std::sort(s.begin(), s.end());
  const auto [a, b] = initial_ab(s, 0.05, 100);
  CHECK(std::fabs(b - 5.3212) < 0.2);
  CHECK(std::fabs(a - 0.0163) < 0.001);
}

TEST_CASE("simulate_scores does not depend on the thread count") {
  const auto x = simulate_scores(30, 20, 6.0, 2000, 5, 1);
  const auto y = simulate_scores(30, 20, 6.0, 2000, 5, 4);
  CHECK(x == y);
}

TEST_CASE("level estimate extremes") {
  const double t = threshold_cnd(30, 10, 0.05).c_nd;
  CHECK(estimate_level(0.5, std::numeric_limits<double>::max(), 30, 10, t, 200, 1).level == 0.0);
  CHECK(estimate_level(1e3, 1e3, 30, 10, t, 200, 1).level == 0.0);
  CHECK(estimate_level(1e-9, 1e-9, 30, 10, t, 200, 1).level == 1.0);
}

TEST_CASE("alpha = 1 collapses b onto a") {
  CalibrationTarget target;
  target.n = 30;
  target.d = 10;
  target.alpha = 1.0;
  target.level_reps = 200;
  const BisectionResult r = bisect_b(0.2, 3.0, target, 4);
  CHECK(r.b == 0.2);
}

TEST_CASE("bisection keeps a nested bracket and lands on the target level") {
  CalibrationTarget target;
  target.n = 40;
  target.d = 20;
  target.h = 10;
  target.mc_size = 20000;
  target.level_reps = 4000;
  target.tol_level = 0.004;
  const CalibrationResult res = calibrate(target, 99, 1);
  REQUIRE_FALSE(res.trace.empty());
  for (std::size_t i = 1; i < res.trace.size(); ++i) {
    CHECK(res.trace[i].b_lo >= res.trace[i - 1].b_lo);
    CHECK(res.trace[i].b_hi <= res.trace[i - 1].b_hi);
    CHECK(res.trace[i].b_hi > res.trace[i].b_lo);
  }
  for (const auto& step : res.trace) {
    CHECK(step.b > step.b_lo);
    CHECK(step.b < step.b_hi);
  }
  CHECK(res.constants.a < res.constants.b);
  CHECK(res.constants.provenance.seed == 99);
  CHECK(res.constants.provenance.source == "calibrated");

  // self-consistency on fresh replicates
  const std::size_t reps = 20000;
  const LevelEstimate check =
      estimate_level(res.constants.a, res.constants.b, target.n, target.d, res.radius, reps, 12345);
  const double se = std::sqrt(0.05 * 0.95 / reps) + std::sqrt(0.05 * 0.95 / target.level_reps);
  CHECK(std::fabs(check.level - 0.05) <= std::max(target.tol_level, 3.0 * se));
  CHECK(std::fabs(check.mean_projections - target.h) < 0.1 * target.h);

  // same seed, same constants
  const CalibrationResult again = calibrate(target, 99, 2);
  CHECK(again.constants.a == res.constants.a);
  CHECK(again.constants.b == res.constants.b);
}

TEST_CASE("bracket failures are reported") {
  CalibrationTarget target;
  target.n = 30;
  target.d = 10;
  target.level_reps = 300;
  // a far above every score: the level at b = a is zero
  CHECK_THROWS_AS(bisect_b(50.0, 60.0, target, 1), BracketFailure);
}

TEST_CASE("calibration target validation") {
  CalibrationTarget t;
  t.h = 0.5;
  CHECK_THROWS_AS(t.validate(), DomainError);
  t.h = 50;
  t.delta = 1.0;
  CHECK_THROWS_AS(t.validate(), DomainError);
  t.delta = 0.05;
  CHECK_NOTHROW(t.validate());
  CHECK(t.projection_cap() == 5000);
  CHECK(t.calibration_radius() == threshold_cnd(50, 50, 0.05).c_nd);
  t.radius = 3.0;
  CHECK(t.calibration_radius() == 3.0);
}

TEST_CASE("tabulated constants and tuning radius") {
  const auto c = tabulated_constants(50, 50, 50);
  REQUIRE(c.has_value());
  CHECK(c->a == 0.0325);
  CHECK(c->b == 4.9714);
  CHECK(c->provenance.mc_size == 1000000);
  CHECK(tabulated_constants(500, 1000, 100)->b == 3.8197);
  CHECK_FALSE(tabulated_constants(40, 397, 50).has_value());
  CHECK_FALSE(tabulated_constants(50, 50, 75).has_value());

  // q_d^n sits just above the median of sqrt(chi^2_d), about sqrt(d)
  const double q = tuning_radius(50, 50, 500, 3);
  CHECK(q > std::sqrt(50.0));
  CHECK(q < std::sqrt(50.0) + 1.5);
}
