#include <doctest.h>

#include <cmath>
#include <random>

#include "aiflab/aif.hpp"
#include "aiflab/errors.hpp"
#include "aiflab/location_scale.hpp"
#include "support.hpp"

using namespace aiflab;
using namespace testsupport;

namespace {

double Phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
double phi(double z) { return std::exp(-z * z / 2) / std::sqrt(2 * M_PI); }

// E[Z^2; |Z| <= K] under the standard normal
double trunc_second(double K) { return (2 * Phi(K) - 1) - 2 * K * phi(K); }

LocationScaleSpec random_spline_spec(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> z{0.0}, p1{0.0}, p2{-1.0 - u(rng)};
  for (int i = 1; i < 8; ++i) {
    z.push_back(z.back() + 0.2 + u(rng));
    p1.push_back(p1.back() + 0.05 + u(rng));
    p2.push_back(p2.back() + 0.05 + 2 * u(rng));
  }
  return spec_from_tables("spline", MonotoneCubic(z, p1), MonotoneCubic(z, p2));
}

}  // namespace

TEST_CASE("closed-form location-scale AIF of mean/std is sqrt(2)") {
  std::mt19937_64 rng(41);
  for (int t = 0; t < 10; ++t) {
    const Vec x = normal_vec(rng, 5 + 10 * t, 3.0, -1.0);
    CHECK(ls_aif(meanstd_spec(), x, 2.0).aif == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  }
}

TEST_CASE("mean/std parameter Jacobian is -(1/S) diag(N, 2N)") {
  std::mt19937_64 rng(42);
  const Vec x = normal_vec(rng, 17, 2.0);
  const AifReport r = ls_aif(meanstd_spec(), x, 2.0);
  const double S = r.theta(1);
  Mat expect_g(2, 2);
  expect_g << -17.0 / S, 0.0, 0.0, -34.0 / S;
  CHECK(rel_err(r.jac.g_theta, expect_g) < 1e-10);
}

TEST_CASE("closed form and generic AIF paths agree") {
  std::mt19937_64 rng(43);
  for (int t = 0; t < 20; ++t) {
    const LocationScaleSpec s = t % 2 ? huber2_spec(1.0 + 0.1 * t, 1.0 + 0.1 * t, 0.5) : random_spline_spec(rng);
    const Vec x = normal_vec(rng, 8 + t, 1.5);
    for (double p : {1.0, 2.0, 3.5}) {
      AifReport a;
      try {
        a = ls_aif(s, x, p);
      } catch (const AifError&) {
        continue;
      }
      const AifReport b = compute_aif(to_mestimator(s), row_data(x), p, a.theta);
      CHECK(a.aif == doctest::Approx(b.aif).epsilon(1e-8));
    }
  }
}

TEST_CASE("AIF of any monotone location-scale pair is at least 1") {
  std::mt19937_64 rng(44);
  int n = 0;
  for (int t = 0; t < 60; ++t) {
    const LocationScaleSpec s = random_spline_spec(rng);
    const Vec x = normal_vec(rng, 6 + t % 20);
    try {
      CHECK(ls_aif(s, x, 2.0).aif >= 1.0 - 1e-10);
      ++n;
    } catch (const AifError&) {
    }
  }
  CHECK(n > 30);
}

TEST_CASE("Huber Proposal 2 beta, sets and IF profile under the normal") {
  const BaseDensity f0 = normal_density();
  for (double K : {0.8, 1.345, 2.0}) {
    const double beta = K * K * 2 * (1 - Phi(K)) + trunc_second(K);
    CHECK(huber2_beta(f0, K) == doctest::Approx(beta).epsilon(1e-12));
    const LocationScaleSpec s = huber2_for(f0, K);
    CHECK(population_scale(s, f0) == doctest::Approx(1.0).epsilon(1e-12));
    const IfProfile prof = ls_if_profile(s, f0);
    const double B1 = 2 * Phi(K) - 1, B2 = 2 * trunc_second(K);
    CHECK(prof.B1 == doctest::Approx(B1).epsilon(1e-12));
    CHECK(prof.B2 == doctest::Approx(B2).epsilon(1e-12));
    const double gamma = std::max(beta / B2, std::hypot((K * K - beta) / B2, K / B1));
    CHECK(prof.gamma_u == doctest::Approx(gamma).epsilon(1e-10));
  }
  CHECK(std::isinf(ls_if_profile(meanstd_spec(), f0).gamma_u));
}

TEST_CASE("Huber Proposal 2 set formulas match the generic a, b, c, d") {
  std::mt19937_64 rng(45);
  for (int t = 0; t < 10; ++t) {
    const Vec x = normal_vec(rng, 50, 2.0, 1.0);
    const Huber2Fit fit = huber_proposal2_stats(x, 1.5, 1.5, 0.7785);
    const AbcdStats g = abcd_stats(huber2_spec(1.5, 1.5, 0.7785), x, fit.T, fit.S);
    CHECK(fit.stats.a == doctest::Approx(g.a).epsilon(1e-12));
    CHECK(fit.stats.b == doctest::Approx(g.b).epsilon(1e-12));
    CHECK(fit.stats.c == doctest::Approx(g.c).epsilon(1e-12));
    CHECK(fit.stats.d == doctest::Approx(g.d).epsilon(1e-12));
    CHECK(fit.n_A_minus + fit.n_A + fit.n_A_plus == 50);
  }
}

TEST_CASE("population AIF of mean/std is sqrt(2) for both bundled densities") {
  CHECK(population_aif(meanstd_spec(), normal_density()) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));
  CHECK(population_aif(meanstd_spec(), laplace_density()) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));
  CHECK(population_scale(meanstd_spec(), laplace_density()) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));
}

TEST_CASE("population AIF of Huber Proposal 2 from independent moments") {
  const double K = 1.5;
  const double B1 = 2 * Phi(K) - 1, m2 = trunc_second(K);
  const double expect_aif = std::sqrt(B1 / (B1 * B1) + 4 * m2 / (4 * m2 * m2));
  CHECK(population_aif(huber2_for(normal_density(), K), normal_density()) ==
        doctest::Approx(expect_aif).epsilon(1e-10));
}

TEST_CASE("Monte Carlo study is reproducible from its seed") {
  const LocationScaleSpec s = huber2_for(normal_density(), 1.5);
  const auto a = monte_carlo_population_check(s, normal_density(), {50, 200}, 9, 3);
  const auto b = monte_carlo_population_check(s, normal_density(), {50, 200}, 9, 3);
  REQUIRE(a.size() == 2);
  CHECK(a[1].mean_aif == b[1].mean_aif);
  CHECK(a[0].population == doctest::Approx(1.80194).epsilon(1e-5));
  CHECK_THROWS_AS(monte_carlo_population_check(s, normal_density(), {1}, 9, 3), AifError);
}

TEST_CASE("too few points is a configuration error") {
  Vec x(1);
  x << 1.0;
  try {
    ls_aif(meanstd_spec(), x, 2.0);
    FAIL("expected ConfigError");
  } catch (const AifError& e) {
    CHECK(e.kind() == ErrorKind::ConfigError);
  }
}
