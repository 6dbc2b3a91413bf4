#include "aiflab/aif.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <random>

#include "aiflab/errors.hpp"
#include "aiflab/numerics.hpp"
#include "aiflab/rng.hpp"

namespace aiflab {

void check_p(double p) {
  if (!(p >= 1.0) || !std::isfinite(p))
    fail(ErrorKind::PNotSupported, fmt::format("p = {} is not supported (need finite p >= 1)", p));
}

double scaled_norm(const Vec& v, double r) {
  const double amax = v.cwiseAbs().maxCoeff();
  if (amax == 0.0) return 0.0;
  if (std::isinf(r)) return amax;
  return amax * std::pow((v.cwiseAbs() / amax).array().pow(r).sum(), 1.0 / r);
}

StackedJacobians assemble_jacobians(const EstimatingSystem& sys, const DataMatrix& data,
                                    const Vec& t_N) {
  StackedJacobians j;
  j.g_theta = sys.G_theta(data, t_N);
  j.g_x = sys.G_x(data, t_N);
  if (!j.g_theta.allFinite() || !j.g_x.allFinite())
    fail(ErrorKind::NumericsError, "Jacobian has non-finite entries");
  if (j.g_x.cols() != static_cast<Eigen::Index>(data.m()) * data.N())
    fail(ErrorKind::DimensionError, "G'_X column count differs from mN");
  Eigen::JacobiSVD<Mat> svd(j.g_theta);
  const auto& s = svd.singularValues();
  j.condition = s(s.size() - 1) > 0 ? s(0) / s(s.size() - 1) : kInf;
  return j;
}

StackedJacobians assemble_jacobians(const MEstimatorSpec& spec, const DataMatrix& data,
                                    const Vec& t_N) {
  return assemble_jacobians(as_system(spec), data, t_N);
}

AifReport aif_from_rows(const std::vector<Vec>& sigmas, const std::vector<Vec>& rows, int m,
                        int N, double p) {
  check_p(p);
  if (sigmas.empty() || sigmas.size() != rows.size())
    fail(ErrorKind::DimensionError, "need one row per sign vector");
  const double mN = static_cast<double>(m) * N;
  const double pstar = p > 1.0 ? p / (p - 1.0) : kInf;
  std::vector<double> vals(rows.size());
  for (std::size_t s = 0; s < rows.size(); ++s) {
    if (rows[s].size() != static_cast<Eigen::Index>(mN))
      fail(ErrorKind::DimensionError, "row length differs from mN");
    vals[s] = scaled_norm(rows[s], pstar);
  }
  std::size_t best = 0;
  for (std::size_t s = 1; s < vals.size(); ++s)
    if (vals[s] > vals[best]) best = s;

  AifReport r;
  r.p = p;
  r.m = m;
  r.N = N;
  r.sigma_star = sigmas[best];
  for (std::size_t s = 0; s < vals.size(); ++s)
    if (vals[s] >= vals[best] * (1 - 1e-12)) r.maximizing_sigmas.push_back(sigmas[s]);
  r.a_vector = rows[best];
  r.aif = std::pow(mN, 1.0 / p) * vals[best];

  const Vec& a = r.a_vector;
  Vec d = Vec::Zero(a.size());
  const double amax = a.cwiseAbs().maxCoeff();
  if (amax > 0) {
    if (p == 1.0) {
      int k = -1;
      for (int i = 0; i < a.size(); ++i)
        if (std::abs(a(i)) >= amax * (1 - 1e-12)) {
          r.argmax_ties.push_back(i);
          if (k < 0) k = i;
        }
      d(k) = -(a(k) > 0 ? 1.0 : -1.0) * mN;
    } else {
      const Vec b = a.cwiseAbs() / amax;
      const double denom = std::pow(b.array().pow(pstar).sum(), 1.0 / p);
      const double scale = std::pow(mN, 1.0 / p) / denom;
      for (int i = 0; i < a.size(); ++i) {
        if (a(i) == 0.0) continue;
        d(i) = -std::pow(b(i), 1.0 / (p - 1.0)) * scale * (a(i) > 0 ? 1.0 : -1.0);
      }
    }
  }
  r.delta_x_unit = Eigen::Map<const Mat>(d.data(), m, N);
  return r;
}

AifReport aif_from_jacobians(const StackedJacobians& jac, int m, int N, double p) {
  check_p(p);
  const int q = static_cast<int>(jac.g_theta.rows());
  if (q > 20)
    fail(ErrorKind::CombinatorialLimit,
         fmt::format("q = {} exceeds the sign-enumeration cap of 20", q));
  if (!(jac.condition < 1e12))
    fail(ErrorKind::SingularJacobian,
         fmt::format("G'_theta condition number {:.3e} exceeds 1e12", jac.condition));
  Eigen::ColPivHouseholderQR<Mat> qr(jac.g_theta);
  const Mat P = qr.solve(jac.g_x);  // G_theta^{-1} G_x
  const long count = 1L << (q - 1);
  std::vector<Vec> sigmas, rows;
  sigmas.reserve(count);
  rows.reserve(count);
  for (long code = 0; code < count; ++code) {
    Vec s(q);
    s(0) = 1.0;
    for (int i = 1; i < q; ++i) s(i) = (code >> (i - 1)) & 1 ? -1.0 : 1.0;
    rows.push_back(P.transpose() * s);
    sigmas.push_back(std::move(s));
  }
  AifReport r = aif_from_rows(sigmas, rows, m, N, p);
  r.jac = jac;
  if (jac.condition >= 1e8)
    r.warnings.push_back(fmt::format("G'_theta is ill-conditioned (condition {:.3e})", jac.condition));
  return r;
}

AifReport compute_aif(const EstimatingSystem& sys, const DataMatrix& data, double p,
                      const std::optional<Vec>& t_N) {
  check_p(p);
  if (sys.q > 20)
    fail(ErrorKind::CombinatorialLimit,
         fmt::format("q = {} exceeds the sign-enumeration cap of 20", sys.q));
  const Vec theta = t_N ? *t_N : solve(sys, data);
  StackedJacobians jac = assemble_jacobians(sys, data, theta);
  AifReport r = aif_from_jacobians(jac, data.m(), data.N(), p);
  r.theta = theta;
  return r;
}

AifReport compute_aif(const MEstimatorSpec& spec, const DataMatrix& data, double p,
                      const std::optional<Vec>& t_N) {
  return compute_aif(as_system(spec), data, p, t_N);
}

Mat synthesize_attack(const AifReport& report, double delta) {
  if (!(delta > 0) || !std::isfinite(delta))
    fail(ErrorKind::ConfigError, "attack budget delta must be positive");
  return delta * report.delta_x_unit;
}

KktResidual attack_kkt(const AifReport& report, double delta) {
  KktResidual k;
  const Mat D = synthesize_attack(report, delta);
  const Eigen::Map<const Vec> d(D.data(), D.size());
  const Vec& a = report.a_vector;
  const double p = report.p;
  const double mN = static_cast<double>(report.m) * report.N;
  const double amax = a.cwiseAbs().maxCoeff();
  if (amax == 0.0) return k;
  for (int i = 0; i < a.size(); ++i)
    if (a(i) != 0.0 && d(i) != 0.0 && (a(i) > 0) == (d(i) > 0)) k.sign += 1;
  if (p > 1.0) {
    const double pstar = p / (p - 1.0);
    const Vec b = a.cwiseAbs() / amax;
    // lambda = (1/p) (sum|a|^{p*} / (mN delta^p))^{(p-1)/p}, evaluated with max scaling
    k.lambda = amax / p * std::pow(b.array().pow(pstar).sum() / mN, (p - 1.0) / p) /
               std::pow(delta, p - 1.0);
    double worst = 0.0;
    for (int i = 0; i < a.size(); ++i) {
      const double s = d(i) > 0 ? 1.0 : (d(i) < 0 ? -1.0 : 0.0);
      const double r = a(i) + k.lambda * p * s * std::pow(std::abs(d(i)), p - 1.0);
      worst = std::max(worst, std::abs(r));
    }
    k.stationarity = worst / amax;
  } else {
    // p = 1: the single active entry sits on an argmax of |a|
    int nz = 0;
    double worst = 0.0;
    for (int i = 0; i < a.size(); ++i)
      if (d(i) != 0.0) {
        ++nz;
        worst = std::max(worst, (amax - std::abs(a(i))) / amax);
      }
    k.lambda = amax;
    k.stationarity = nz == 1 ? worst : 1.0;
  }
  const double used = (D.array().abs() / delta).pow(p).sum() / mN;
  k.budget = std::abs(used - 1.0);
  return k;
}

std::vector<FirstOrderRow> verify_attack_firstorder(const EstimatingSystem& sys,
                                                    const DataMatrix& data,
                                                    const AifReport& report,
                                                    const std::vector<double>& deltas) {
  std::vector<FirstOrderRow> out;
  SolveConfig cfg;
  cfg.tol = 1e-13;
  cfg.initial_theta = report.theta;
  const Vec t0 = solve(sys, data, cfg);
  for (double delta : deltas) {
    const Mat D = synthesize_attack(report, delta);
    const Vec t1 = solve(sys, data.perturbed(D), cfg);
    FirstOrderRow row;
    row.delta = delta;
    row.ratio = (t1 - t0).lpNorm<1>() / delta;
    row.discrepancy = std::abs(row.ratio - report.aif) / report.aif;
    out.push_back(row);
  }
  return out;
}

double brute_force_aif(const EstimatingSystem& sys, const DataMatrix& data, double p,
                       double delta, int grid_size, std::uint64_t seed) {
  check_p(p);
  const int m = data.m(), N = data.N();
  const int K = m * N;
  if (K > 6) fail(ErrorKind::CombinatorialLimit, fmt::format("brute force needs mN <= 6, got {}", K));
  if (delta < 0) fail(ErrorKind::ConfigError, "delta must be nonnegative");
  if (delta == 0) return 0.0;
  if (grid_size < 1) fail(ErrorKind::ConfigError, "grid_size must be positive");

  SolveConfig cfg;
  cfg.tol = 1e-14;
  const Vec t0 = solve(sys, data, cfg);
  cfg.initial_theta = t0;
  const double radius = std::pow(static_cast<double>(K), 1.0 / p) * delta;

  auto project = [&](Vec v) {
    const double n = scaled_norm(v, p);
    return Vec(v * (radius / n));
  };
  auto objective = [&](const Vec& v) {
    const Mat D = Eigen::Map<const Mat>(v.data(), m, N);
    try {
      const Vec t1 = solve(sys, data.perturbed(D), cfg);
      return (t1 - t0).lpNorm<1>() / delta;
    } catch (const AifError&) {
      return -1.0;
    }
  };

  std::vector<std::pair<double, Vec>> cands;
  // corners of the cube inscribed in the ball and the axis vertices
  for (int code = 0; code < (1 << K); ++code) {
    Vec v(K);
    for (int i = 0; i < K; ++i) v(i) = (code >> i) & 1 ? -1.0 : 1.0;
    v = project(v);
    cands.emplace_back(objective(v), v);
  }
  for (int i = 0; i < K; ++i)
    for (double s : {-1.0, 1.0}) {
      Vec v = Vec::Zero(K);
      v(i) = s * radius;
      cands.emplace_back(objective(v), v);
    }
  auto rng = make_stream(seed, {static_cast<std::uint64_t>(K)});
  std::normal_distribution<double> gauss;
  for (int g = 0; g < grid_size; ++g) {
    Vec v(K);
    for (int i = 0; i < K; ++i) v(i) = gauss(rng);
    if (v.norm() == 0) continue;
    v = project(v);
    cands.emplace_back(objective(v), v);
  }
  std::sort(cands.begin(), cands.end(),
            [](const auto& x, const auto& y) { return x.first > y.first; });

  double best = cands.front().first;
  const int starts = std::min<int>(4, static_cast<int>(cands.size()));
  for (int s = 0; s < starts; ++s) {
    Vec v = cands[s].second;
    double f = cands[s].first;
    double step = 0.2 * radius;
    while (step > 1e-4 * radius) {
      bool improved = false;
      for (int i = 0; i < K; ++i)
        for (double dir : {-1.0, 1.0}) {
          Vec w = v;
          w(i) += dir * step;
          if (w.norm() == 0) continue;
          w = project(w);
          const double fw = objective(w);
          if (fw > f) {
            f = fw;
            v = w;
            improved = true;
          }
        }
      if (!improved) step *= 0.5;
    }
    best = std::max(best, f);
  }
  return best;
}

}  // namespace aiflab
