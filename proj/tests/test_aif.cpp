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

// max over sigma2 of [(1/N) sum |1 + sigma2 z_n|^{p*}]^{1/p*} with z the
// standardized sample
double meanstd_closed_form(const Vec& x, double p) {
  const double mean = x.mean();
  const double sd = std::sqrt((x.array() - mean).square().mean());
  const Eigen::ArrayXd z = (x.array() - mean) / sd;
  double best = 0.0;
  for (double s : {1.0, -1.0}) {
    const Eigen::ArrayXd t = (1.0 + s * z).abs();
    double v;
    if (p == 1.0) {
      v = t.maxCoeff();
    } else {
      const double ps = p / (p - 1.0);
      v = std::pow(t.pow(ps).mean(), 1.0 / ps);
    }
    best = std::max(best, v);
  }
  return best;
}

}  // namespace

TEST_CASE("mean/std AIF is sqrt(2) at p = 2 and follows the closed form for other p") {
  std::mt19937_64 rng(21);
  const MEstimatorSpec ms = to_mestimator(meanstd_spec());
  for (int t = 0; t < 12; ++t) {
    const Vec x = normal_vec(rng, 5 + 7 * t, 1.0 + t);
    CHECK(compute_aif(ms, row_data(x), 2.0).aif == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    for (double p : {1.0, 1.5, 3.0, 6.0})
      CHECK(compute_aif(ms, row_data(x), p).aif ==
            doctest::Approx(meanstd_closed_form(x, p)).epsilon(1e-10));
  }
}

TEST_CASE("p = 2 attack for a = (3, 4) at unit budget") {
  Vec a(2);
  a << 3.0, 4.0;
  const AifReport r = aif_from_rows({Vec::Ones(1)}, {a}, 1, 2, 2.0);
  const Mat d = synthesize_attack(r, 1.0);
  CHECK(d(0, 0) == doctest::Approx(-std::sqrt(2.0) / 5 * 3));
  CHECK(d(0, 1) == doctest::Approx(-std::sqrt(2.0) / 5 * 4));
  CHECK(d.squaredNorm() == doctest::Approx(2.0));
  CHECK(r.aif == doctest::Approx(std::sqrt(2.0) * 5.0));
}

TEST_CASE("attack KKT conditions hold for p > 1 and p = 1 puts the budget on one entry") {
  std::mt19937_64 rng(4);
  for (double p : {1.25, 2.0, 3.0, 7.0}) {
    const Vec a = normal_vec(rng, 9);
    const AifReport r = aif_from_rows({Vec::Ones(1)}, {a}, 3, 3, p);
    for (double delta : {1e-3, 1.0, 10.0}) {
      const KktResidual k = attack_kkt(r, delta);
      CHECK(k.stationarity < 1e-12);
      CHECK(k.budget < 1e-12);
      CHECK(k.sign == 0);
      CHECK(k.lambda > 0);
    }
  }
  Vec a(4);
  a << 1.0, -3.0, 2.0, 0.5;
  const AifReport r = aif_from_rows({Vec::Ones(1)}, {a}, 1, 4, 1.0);
  const Mat d = synthesize_attack(r, 0.5);
  CHECK((d.array() != 0.0).count() == 1);
  CHECK(d(0, 1) == doctest::Approx(4 * 0.5));
  CHECK(r.aif == doctest::Approx(4 * 3.0));
}

TEST_CASE("p = 1 records ties and uses the smallest index") {
  Vec a(3);
  a << 2.0, -2.0, 1.0;
  const AifReport r = aif_from_rows({Vec::Ones(1)}, {a}, 1, 3, 1.0);
  CHECK(r.argmax_ties == std::vector<int>{0, 1});
  const Mat d = synthesize_attack(r, 1.0);
  CHECK(d(0, 0) == doctest::Approx(-3.0));
  CHECK(d(0, 1) == 0.0);
}

TEST_CASE("argument checks") {
  try {
    check_p(0.5);
    FAIL("expected PNotSupported");
  } catch (const AifError& e) {
    CHECK(e.kind() == ErrorKind::PNotSupported);
  }
  StackedJacobians big;
  big.g_theta = Mat::Identity(21, 21);
  big.g_x = Mat::Ones(21, 3);
  try {
    aif_from_jacobians(big, 1, 3, 2.0);
    FAIL("expected CombinatorialLimit");
  } catch (const AifError& e) {
    CHECK(e.kind() == ErrorKind::CombinatorialLimit);
  }
  const AifReport dummy = aif_from_rows({Vec::Ones(1)}, {Vec::Ones(2)}, 1, 2, 2.0);
  CHECK_THROWS_AS(synthesize_attack(dummy, 0.0), AifError);
}

TEST_CASE("AIF is invariant to translating and rescaling the data") {
  std::mt19937_64 rng(8);
  const MEstimatorSpec s = to_mestimator(huber2_spec(1.5, 1.5, 0.7785));
  for (int t = 0; t < 8; ++t) {
    const Vec x = normal_vec(rng, 30);
    const double a0 = compute_aif(s, row_data(x), 2.0).aif;
    const Vec moved = (x.array() * (0.1 + t) - 4.0 * t).matrix();
    CHECK(compute_aif(s, row_data(moved), 2.0).aif == doctest::Approx(a0).epsilon(1e-8));
  }
}

TEST_CASE("optimal attack realizes the AIF to first order") {
  std::mt19937_64 rng(13);
  const DataMatrix d = row_data(normal_vec(rng, 12));
  // mean/std responds linearly along its optimal direction
  const EstimatingSystem ms = as_system(to_mestimator(meanstd_spec()));
  for (const auto& row : verify_attack_firstorder(ms, d, compute_aif(ms, d, 2.0), {1e-2, 1e-3, 1e-4}))
    CHECK(row.discrepancy < 1e-9);
  // a smooth nonlinear pair shows the O(delta) approach
  const std::vector<double> z{0.0, 0.5, 1.0, 2.0, 4.0};
  const LocationScaleSpec s = spec_from_tables(
      "smooth", MonotoneCubic(z, {0.0, 0.45, 0.8, 1.3, 1.8}), MonotoneCubic(z, {-0.6, -0.4, 0.1, 1.2, 2.4}));
  const EstimatingSystem sys = as_system(to_mestimator(s));
  const AifReport r = compute_aif(sys, d, 2.0);
  const auto rows = verify_attack_firstorder(sys, d, r, {1e-2, 1e-3, 1e-4});
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].discrepancy > rows[1].discrepancy);
  CHECK(rows[1].discrepancy > rows[2].discrepancy);
  CHECK(rows[2].discrepancy < 1e-3);
}

TEST_CASE("no admissible attack of a small budget beats the first-order optimum") {
  std::mt19937_64 rng(14);
  const EstimatingSystem sys = as_system(to_mestimator(meanstd_spec()));
  const DataMatrix d = row_data(normal_vec(rng, 3));
  const double brute = brute_force_aif(sys, d, 2.0, 1e-3, 400, 3);
  CHECK(brute == doctest::Approx(std::sqrt(2.0)).epsilon(0.02));
  CHECK(brute_force_aif(sys, d, 2.0, 0.0, 10) == 0.0);
  const DataMatrix big = row_data(normal_vec(rng, 7));
  try {
    brute_force_aif(sys, big, 2.0, 1e-3, 10);
    FAIL("expected CombinatorialLimit");
  } catch (const AifError& e) {
    CHECK(e.kind() == ErrorKind::CombinatorialLimit);
  }
}

TEST_CASE("scaled norms") {
  Vec v(3);
  v << 3.0, -4.0, 0.0;
  CHECK(scaled_norm(v, 2.0) == doctest::Approx(5.0));
  CHECK(scaled_norm(v, 1.0) == doctest::Approx(7.0));
  CHECK(scaled_norm(v, kInf) == doctest::Approx(4.0));
  CHECK(scaled_norm(Vec::Constant(2, 1e200), 2.0) == doctest::Approx(std::sqrt(2.0) * 1e200));
}
