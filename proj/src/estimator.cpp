#include "aiflab/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <vector>

#include "aiflab/errors.hpp"
#include "aiflab/rng.hpp"

namespace aiflab {

namespace {

void check_dims(const MEstimatorSpec& spec, const DataMatrix& data, const Vec& theta) {
  if (data.m() != spec.m)
    fail(ErrorKind::DimensionError,
         fmt::format("{} expects m = {}, data has m = {}", spec.name, spec.m, data.m()));
  if (theta.size() != spec.q)
    fail(ErrorKind::DimensionError,
         fmt::format("{} expects q = {}, theta has length {}", spec.name, spec.q, theta.size()));
}

void check_dims(const EstimatingSystem& sys, const DataMatrix& data, const Vec& theta) {
  if (data.m() != sys.m)
    fail(ErrorKind::DimensionError,
         fmt::format("{} expects m = {}, data has m = {}", sys.name, sys.m, data.m()));
  if (theta.size() != sys.q)
    fail(ErrorKind::DimensionError,
         fmt::format("{} expects q = {}, theta has length {}", sys.name, sys.q, theta.size()));
}

double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  std::nth_element(v.begin(), v.begin() + n / 2, v.end());
  double hi = v[n / 2];
  if (n % 2 == 1) return hi;
  double lo = *std::max_element(v.begin(), v.begin() + n / 2);
  return 0.5 * (lo + hi);
}

}  // namespace

Vec evaluate_G(const MEstimatorSpec& spec, const DataMatrix& data, const Vec& theta) {
  check_dims(spec, data, theta);
  Vec g = Vec::Zero(spec.q);
  for (int n = 0; n < data.N(); ++n) {
    Vec v = spec.psi(data.point(n), theta);
    if (v.size() != spec.q) fail(ErrorKind::DimensionError, "psi returned the wrong length");
    g += v;
  }
  require_finite(g, "psi sum");
  return g;
}

Vec evaluate_G(const EstimatingSystem& sys, const DataMatrix& data, const Vec& theta) {
  check_dims(sys, data, theta);
  Vec g = sys.G(data, theta);
  require_finite(g, "estimating equations");
  return g;
}

EstimatingSystem as_system(const MEstimatorSpec& spec) {
  EstimatingSystem s;
  s.m = spec.m;
  s.q = spec.q;
  s.name = spec.name;
  s.G = [spec](const DataMatrix& d, const Vec& t) { return evaluate_G(spec, d, t); };
  s.G_theta = [spec](const DataMatrix& d, const Vec& t) {
    Mat j = Mat::Zero(spec.q, spec.q);
    for (int n = 0; n < d.N(); ++n) j += spec.psi_jac_theta(d.point(n), t);
    return j;
  };
  s.G_x = [spec](const DataMatrix& d, const Vec& t) {
    Mat j(spec.q, static_cast<Eigen::Index>(spec.m) * d.N());
    for (int n = 0; n < d.N(); ++n) j.middleCols(n * spec.m, spec.m) = spec.psi_jac_x(d.point(n), t);
    return j;
  };
  const InitRule rule = spec.init;
  const int q = spec.q;
  s.initial = [rule, q](const DataMatrix& d) -> Vec {
    switch (rule) {
      case InitRule::LocationScale: return location_scale_start(d);
      case InitRule::Regression: return ols_start(d);
      case InitRule::Zero: break;
    }
    return Vec::Zero(q);
  };
  s.admissible = spec.admissible;
  return s;
}

Vec location_scale_start(const DataMatrix& data) {
  if (data.m() != 1) fail(ErrorKind::DimensionError, "location-scale data must have m = 1");
  std::vector<double> v(data.x().data(), data.x().data() + data.N());
  const double med = median_of(v);
  for (auto& e : v) e = std::abs(e - med);
  double s = median_of(v) / 0.6745;
  if (!(s > 0)) {
    const double mean = data.x().mean();
    s = std::sqrt((data.x().array() - mean).square().mean());
  }
  if (!(s > 0)) s = 1.0;
  Vec t(2);
  t << med, s;
  return t;
}

Vec ols_start(const DataMatrix& data) {
  const int q = data.m() - 1;
  if (q < 1) fail(ErrorKind::DimensionError, "regression data needs q >= 1 covariates plus y");
  Mat X = data.x().topRows(q);
  Vec y = data.x().row(q).transpose();
  Eigen::ColPivHouseholderQR<Mat> qr(X * X.transpose());
  if (qr.rank() < q) fail(ErrorKind::SingularDesign, "X X^T is rank deficient");
  return qr.solve(X * y);
}

SolveResult solve_ex(const EstimatingSystem& sys, const DataMatrix& data,
                     const SolveConfig& cfg) {
  if (cfg.max_iter < 1) fail(ErrorKind::ConfigError, "max_iter must be >= 1");
  if (!(cfg.tol > 0)) fail(ErrorKind::ConfigError, "tol must be positive");
  if (!(cfg.damping > 0 && cfg.damping <= 1)) fail(ErrorKind::ConfigError, "damping must be in (0, 1]");
  Vec theta = cfg.initial_theta ? *cfg.initial_theta : sys.initial(data);
  check_dims(sys, data, theta);
  const double N = data.N();
  auto ok = [&](const Vec& t) { return t.allFinite() && (!sys.admissible || sys.admissible(t)); };
  if (!ok(theta)) fail(ErrorKind::ConfigError, "initial theta is outside the parameter domain");

  Vec g = evaluate_G(sys, data, theta);
  double res = g.lpNorm<Eigen::Infinity>() / N;
  int polish = 0;
  for (int it = 0; it < cfg.max_iter; ++it) {
    if (res <= cfg.tol) {
      // a couple of extra Newton steps, kept only if they help
      if (polish >= 2 || res == 0.0) return {theta, res, it};
      ++polish;
    }
    Mat J = sys.G_theta(data, theta);
    Eigen::JacobiSVD<Mat> svd(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (!J.allFinite() || sv(sv.size() - 1) <= 1e-14 * sv(0) || sv(0) == 0.0)
      fail(ErrorKind::SingularJacobian,
           fmt::format("G'_theta singular at iteration {} (residual {})", it, res));
    Vec step = -cfg.damping * svd.solve(g);
    double s = 1.0;
    bool accepted = false;
    const double gnorm = g.norm();
    for (int h = 0; h <= 20; ++h, s *= 0.5) {
      Vec trial = theta + s * step;
      if (!ok(trial)) continue;
      Vec gt = sys.G(data, trial);
      if (!gt.allFinite()) continue;
      if (gt.norm() < gnorm) {
        theta = trial;
        g = gt;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (res <= cfg.tol) return {theta, res, it};
      fail(ErrorKind::DidNotConverge,
           fmt::format("line search stalled at iteration {} with residual {}", it, res));
    }
    res = g.lpNorm<Eigen::Infinity>() / N;
  }
  if (res <= cfg.tol) return {theta, res, cfg.max_iter};
  fail(ErrorKind::DidNotConverge,
       fmt::format("no convergence after {} iterations, final residual {}", cfg.max_iter, res));
}

Vec solve(const EstimatingSystem& sys, const DataMatrix& data, const SolveConfig& cfg) {
  return solve_ex(sys, data, cfg).theta;
}

Vec solve(const MEstimatorSpec& spec, const DataMatrix& data, const SolveConfig& cfg) {
  return solve(as_system(spec), data, cfg);
}

Vec check_fisher_consistency(const MEstimatorSpec& spec, const PointSampler& sampler,
                             const Vec& theta0, int n_mc, std::uint64_t seed) {
  if (n_mc < 100) fail(ErrorKind::ConfigError, "n_mc must be at least 100");
  if (theta0.size() != spec.q) fail(ErrorKind::DimensionError, "theta0 length differs from q");
  auto rng = make_stream(seed, {0xF15E});
  Vec acc = Vec::Zero(spec.q);
  for (int i = 0; i < n_mc; ++i) {
    Vec x = sampler(rng);
    acc += spec.psi(x, theta0);
  }
  return acc / n_mc;
}

}  // namespace aiflab
