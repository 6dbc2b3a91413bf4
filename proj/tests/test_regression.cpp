#include <doctest.h>

#include <cmath>
#include <random>

#include "aiflab/aif.hpp"
#include "aiflab/errors.hpp"
#include "aiflab/regression.hpp"
#include "support.hpp"

using namespace aiflab;
using namespace testsupport;

namespace {

RegressionData random_regression(std::mt19937_64& rng, int q, int N, double noise = 1.0) {
  RegressionData d;
  d.x = normal_mat(rng, q, N);
  const Vec beta = normal_vec(rng, q);
  d.y = d.x.transpose() * beta + normal_vec(rng, N, noise);
  return d;
}

Mat flat_to_stacked(const Vec& flat, int rows, int cols) {
  return Eigen::Map<const Mat>(flat.data(), rows, cols);
}

// smallest distance of any |r_n v_n| from the clip level
double kink_margin(const RegressionData& d, const RegressionScheme& s, const Vec& th) {
  Vec w, v;
  scheme_weights(d, s, w, v);
  const Vec r = d.y - d.x.transpose() * th;
  return ((r.array() * v.array()).abs() - s.K).abs().minCoeff();
}

}  // namespace

TEST_CASE("leverage partials agree with the direct hat-matrix derivative and with differences") {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 25; ++t) {
    const int q = 1 + t % 3, N = q + 3 + t % 7;
    const RegressionData d = random_regression(rng, q, N);
    const Mat A = d.x * d.x.transpose();
    const Mat Ainv = A.inverse();
    const Mat H = d.x.transpose() * Ainv * d.x;
    for (int j = 0; j < N; ++j) {
      for (int k = 0; k < q; ++k) {
        const Vec got = leverage_partials(d, j, k);
        Vec direct(N);
        for (int n = 0; n < N; ++n) direct(n) = 2.0 * (Ainv * d.x.col(n))(k) * ((n == j) - H(j, n));
        CHECK(rel_err(got, direct) < 1e-9);
      }
    }
    const int j = t % N, k = t % q;
    Vec xjk(1);
    xjk(0) = d.x(k, j);
    const Mat fd = fd_jacobian(
        [&](const Vec& s) {
          RegressionData e = d;
          e.x(k, j) = s(0);
          return leverages(e);
        },
        xjk);
    CHECK(rel_err(leverage_partials(d, j, k), fd.col(0)) < 1e-6);
  }
}

TEST_CASE("regression Jacobians match central differences for all schemes") {
  std::mt19937_64 rng(32);
  int checked = 0;
  for (int t = 0; t < 40; ++t) {
    const int q = 1 + t % 3, N = q + 4 + t % 8;
    const RegressionData d = random_regression(rng, q, N, 1.5);
    const SchemeKind kind = static_cast<SchemeKind>(t % 4);
    const RegressionScheme s{kind, 1.0};
    const EstimatingSystem sys = regression_system(s, q);
    const DataMatrix stacked = d.stacked();
    const Vec th = normal_vec(rng, q);
    if (kind != SchemeKind::OLS && kink_margin(d, s, th) < 1e-3) continue;
    const Mat Jt = fd_jacobian([&](const Vec& tt) { return sys.G(stacked, tt); }, th);
    CHECK(rel_err(sys.G_theta(stacked, th), Jt) < 1e-6);
    const Vec flat = Eigen::Map<const Vec>(stacked.x().data(), stacked.x().size());
    const Mat Jx = fd_jacobian(
        [&](const Vec& f) { return sys.G(DataMatrix(flat_to_stacked(f, q + 1, N)), th); }, flat);
    CHECK(rel_err(sys.G_x(stacked, th), Jx) < 1e-6);
    ++checked;
  }
  CHECK(checked > 25);
}

TEST_CASE("scheme weights") {
  std::mt19937_64 rng(33);
  const RegressionData d = random_regression(rng, 2, 9);
  const Vec h = leverages(d);
  CHECK(h.sum() == doctest::Approx(2.0));
  Vec w, v;
  scheme_weights(d, {SchemeKind::Mallows, 1.0}, w, v);
  CHECK(rel_err(w, (1.0 - h.array()).sqrt().matrix()) < 1e-14);
  CHECK(rel_err(v, Vec::Ones(9)) == 0.0);
  scheme_weights(d, {SchemeKind::Schweppe, 1.0}, w, v);
  CHECK(rel_err(v, w.cwiseInverse()) < 1e-14);
  CHECK(huber_eta(3.0, 1.5) == 1.5);
  CHECK(huber_eta_prime(1.5, 1.5) == 1.0);
  CHECK(huber_eta_prime(1.6, 1.5) == 0.0);
}

TEST_CASE("OLS AIF ignores K and unclipped Huber equals OLS") {
  std::mt19937_64 rng(34);
  const RegressionData d = random_regression(rng, 2, 30);
  const double ols = regression_aif(d, {SchemeKind::OLS, 1.0}, 2.0).aif;
  CHECK(regression_aif(d, {SchemeKind::OLS, 7.0}, 2.0).aif == doctest::Approx(ols).epsilon(1e-12));
  CHECK(regression_aif(d, {SchemeKind::Huber, 1e6}, 2.0).aif == doctest::Approx(ols).epsilon(1e-9));
  CHECK(regression_aif(d, {SchemeKind::Schweppe, 1e6}, 2.0).aif == doctest::Approx(ols).epsilon(1e-9));
}

TEST_CASE("regression path agrees with the generic per-point path") {
  std::mt19937_64 rng(35);
  for (int t = 0; t < 10; ++t) {
    const RegressionData d = random_regression(rng, 1 + t % 3, 12 + t);
    for (SchemeKind k : {SchemeKind::OLS, SchemeKind::Huber}) {
      const RegressionScheme s{k, 1.2};
      const AifReport a = regression_aif(d, s, 2.0);
      const AifReport b = compute_aif(regression_point_spec(s, d.q()), d.stacked(), 2.0);
      CHECK(a.aif == doctest::Approx(b.aif).epsilon(1e-8));
    }
  }
  CHECK_THROWS_AS(regression_point_spec({SchemeKind::Mallows, 1.0}, 2), AifError);
}

TEST_CASE("collinear covariates are a singular design") {
  RegressionData d;
  d.x = Mat(2, 5);
  d.x << 1, 2, 3, 4, 5,  //
      2, 4, 6, 8, 10;
  d.y = Vec::LinSpaced(5, 0, 1);
  try {
    regression_aif(d, {SchemeKind::OLS, 1.0}, 2.0);
    FAIL("expected SingularDesign");
  } catch (const AifError& e) {
    CHECK(e.kind() == ErrorKind::SingularDesign);
  }
}

TEST_CASE("sweep rows: OLS constant in K, failures counted") {
  std::mt19937_64 rng(36);
  std::vector<RegressionData> sets;
  for (int r = 0; r < 3; ++r) sets.push_back(random_regression(rng, 2, 25));
  const auto rows = aif_vs_K_sweep(sets, {SchemeKind::OLS, SchemeKind::Mallows}, {1.0, 2.0, 4.0}, 2.0);
  REQUIRE(rows.size() == 6);
  std::vector<double> ols;
  for (const auto& r : rows) {
    CHECK(r.n_ok + r.n_fail == 3);
    if (r.scheme == "ols") ols.push_back(r.mean_aif);
  }
  REQUIRE(ols.size() == 3);
  CHECK(ols[0] == ols[1]);
  CHECK(ols[1] == ols[2]);
  CHECK(parse_scheme("schweppe") == SchemeKind::Schweppe);
  CHECK_THROWS_AS(parse_scheme("lms"), AifError);
}
