#include <doctest.h>

#include <cmath>
#include <random>

#include "aiflab/errors.hpp"
#include "aiflab/estimator.hpp"
#include "aiflab/location_scale.hpp"
#include "support.hpp"

using namespace aiflab;
using namespace testsupport;

TEST_CASE("mean/std equations vanish at the sample mean and 1/N std") {
  const MEstimatorSpec ms = to_mestimator(meanstd_spec());
  Vec two(2);
  two << 1.0, 1.0;
  Vec x(2);
  x << 0.0, 2.0;
  CHECK(evaluate_G(ms, row_data(x), two).cwiseAbs().maxCoeff() < 1e-14);

  std::mt19937_64 rng(11);
  for (int t = 0; t < 10; ++t) {
    const Vec v = normal_vec(rng, 7 + 3 * t, 2.0, 1.0);
    const double mean = v.mean();
    const double sd = std::sqrt((v.array() - mean).square().mean());
    Vec th(2);
    th << mean, sd;
    CHECK(evaluate_G(ms, row_data(v), th).cwiseAbs().maxCoeff() < 1e-10);
    const Vec solved = solve(ms, row_data(v));
    CHECK(solved(0) == doctest::Approx(mean).epsilon(1e-10));
    CHECK(solved(1) == doctest::Approx(sd).epsilon(1e-10));
  }
}

TEST_CASE("solver reproduces the closed-form mean/std of (-1, 0, 1)") {
  Vec x(3);
  x << -1, 0, 1;
  const Vec t = solve(to_mestimator(meanstd_spec()), row_data(x));
  CHECK(std::abs(t(0)) < 1e-12);
  CHECK(t(1) == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("analytic point Jacobians match central differences") {
  std::mt19937_64 rng(5);
  for (const auto& ls : {meanstd_spec(), huber2_spec(1.5, 1.5, 0.7785)}) {
    const MEstimatorSpec s = to_mestimator(ls);
    for (int t = 0; t < 20; ++t) {
      Vec th(2);
      th << normal_vec(rng, 1)(0), 0.5 + std::abs(normal_vec(rng, 1)(0));
      Vec x = normal_vec(rng, 1, 2.0);
      const double z = (x(0) - th(0)) / th(1);
      if (std::abs(std::abs(z) - 1.5) < 1e-3) continue;
      const Mat Jt = fd_jacobian([&](const Vec& tt) { return s.psi(x, tt); }, th);
      const Mat Jx = fd_jacobian([&](const Vec& xx) { return s.psi(xx, th); }, x);
      CHECK(rel_err(s.psi_jac_theta(x, th), Jt) < 1e-6);
      CHECK(rel_err(s.psi_jac_x(x, th), Jx) < 1e-6);
    }
  }
}

TEST_CASE("location-scale estimators are affine equivariant") {
  std::mt19937_64 rng(9);
  const MEstimatorSpec s = to_mestimator(huber2_spec(1.5, 1.5, 0.7785));
  for (int t = 0; t < 10; ++t) {
    const Vec v = normal_vec(rng, 40);
    const Vec base = solve(s, row_data(v));
    const double shift = 3.0 * t - 10.0, scale = 0.3 + t;
    const Vec moved = solve(s, row_data((v.array() * scale + shift).matrix()));
    CHECK(moved(0) == doctest::Approx(scale * base(0) + shift).epsilon(1e-8));
    CHECK(moved(1) == doctest::Approx(scale * base(1)).epsilon(1e-8));
  }
}

TEST_CASE("Monte Carlo Fisher consistency of mean/std under the standard normal") {
  const int n_mc = 20000;
  std::normal_distribution<double> nd;
  const PointSampler sampler = [&](std::mt19937_64& r) {
    Vec x(1);
    x(0) = nd(r);
    return x;
  };
  Vec th0(2);
  th0 << 0.0, 1.0;
  const Vec m = check_fisher_consistency(to_mestimator(meanstd_spec()), sampler, th0, n_mc, 17);
  CHECK(std::abs(m(0)) < 4.0 / std::sqrt(n_mc));
  CHECK(std::abs(m(1)) < 4.0 * std::sqrt(2.0) / std::sqrt(n_mc));
  try {
    check_fisher_consistency(to_mestimator(meanstd_spec()), sampler, th0, 10);
    FAIL("expected ConfigError");
  } catch (const AifError& e) {
    CHECK(e.kind() == ErrorKind::ConfigError);
  }
}

TEST_CASE("constant data leave the scale equation singular") {
  Vec x = Vec::Constant(5, 2.0);
  try {
    solve(to_mestimator(meanstd_spec()), row_data(x));
    FAIL("expected a numeric failure");
  } catch (const AifError& e) {
    CHECK(!is_usage_kind(e.kind()));
  }
}

TEST_CASE("OLS start rejects a rank-deficient design") {
  Mat d(3, 4);
  d << 1, 2, 3, 4,  //
      2, 4, 6, 8,   //
      1, 0, 1, 0;
  try {
    ols_start(DataMatrix(d));
    FAIL("expected SingularDesign");
  } catch (const AifError& e) {
    CHECK(e.kind() == ErrorKind::SingularDesign);
  }
}

TEST_CASE("non-finite data are rejected") {
  Mat d(1, 3);
  d << 1.0, std::nan(""), 2.0;
  CHECK_THROWS_AS(DataMatrix{d}, AifError);
}
