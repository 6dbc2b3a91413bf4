#include "aiflab/location_scale.hpp"

#include <cmath>
#include <fmt/format.h>

#include "aiflab/errors.hpp"
#include "aiflab/io.hpp"
#include "aiflab/parallel.hpp"
#include "aiflab/rng.hpp"

namespace aiflab {

LocationScaleSpec meanstd_spec() {
  LocationScaleSpec s;
  s.name = "meanstd";
  s.psi1 = [](double z) { return z; };
  s.dpsi1 = [](double) { return 1.0; };
  s.psi2 = [](double z) { return z * z - 1.0; };
  s.dpsi2 = [](double z) { return 2.0 * z; };
  return s;
}

LocationScaleSpec huber2_spec(double K, double alpha, double beta) {
  if (!(K > 0) || !(alpha > 0)) fail(ErrorKind::ConfigError, "Huber Proposal 2 needs K, alpha > 0");
  LocationScaleSpec s;
  s.name = "huber2";
  s.psi1 = [K](double z) { return std::max(-K, std::min(K, z)); };
  s.dpsi1 = [K](double z) { return std::abs(z) <= K ? 1.0 : 0.0; };
  s.psi2 = [alpha, beta](double z) { return std::min(alpha * alpha, z * z) - beta; };
  s.dpsi2 = [alpha](double z) { return std::abs(z) <= alpha ? 2.0 * z : 0.0; };
  s.kinks = {K, alpha};
  s.psi1_limit = K;
  s.psi2_limit = alpha * alpha - beta;
  return s;
}

double huber2_beta(const BaseDensity& f0, double K) {
  return 2.0 * half_expect(f0, [K](double z) { return std::min(K * K, z * z); }, {K});
}

LocationScaleSpec huber2_for(const BaseDensity& f0, double K) {
  return huber2_spec(K, K, huber2_beta(f0, K));
}

LocationScaleSpec spec_from_tables(const std::string& name, MonotoneCubic t1, MonotoneCubic t2) {
  if (t1.lo() != 0.0 || t2.lo() != 0.0)
    fail(ErrorKind::ConfigError, "psi tables must start at z = 0");
  LocationScaleSpec s;
  s.name = name;
  s.psi1 = [t1](double z) { return z >= 0 ? t1.value(z) : -t1.value(-z); };
  s.dpsi1 = [t1](double z) { return t1.deriv(std::abs(z)); };
  s.psi2 = [t2](double z) { return t2.value(std::abs(z)); };
  s.dpsi2 = [t2](double z) { return z >= 0 ? t2.deriv(z) : -t2.deriv(-z); };
  std::vector<double> k = t1.knots();
  k.insert(k.end(), t2.knots().begin(), t2.knots().end());
  std::sort(k.begin(), k.end());
  k.erase(std::unique(k.begin(), k.end()), k.end());
  s.kinks = k;
  const double far = 1e12;
  s.psi1_limit = t1.deriv(far) > 0 ? kInf : t1.value(far);
  s.psi2_limit = t2.deriv(far) > 0 ? kInf : t2.value(far);
  return s;
}

LocationScaleSpec spec_from_table_csv(const std::string& path) {
  auto rows = read_csv_rows(path, true);
  std::vector<double> z, p1, d1, p2, d2;
  for (const auto& r : rows) {
    if (r.size() != 5)
      fail(ErrorKind::ConfigError, "psi table needs columns z, psi1, psi1', psi2, psi2'");
    z.push_back(r[0]);
    p1.push_back(r[1]);
    d1.push_back(r[2]);
    p2.push_back(r[3]);
    d2.push_back(r[4]);
  }
  return spec_from_tables("custom-table", MonotoneCubic(z, p1, d1), MonotoneCubic(z, p2, d2));
}

MEstimatorSpec to_mestimator(const LocationScaleSpec& ls) {
  MEstimatorSpec s;
  s.m = 1;
  s.q = 2;
  s.name = ls.name;
  s.init = InitRule::LocationScale;
  s.admissible = [](const Vec& t) { return t(1) > 0; };
  s.psi = [ls](const Eigen::Ref<const Vec>& x, const Vec& t) -> Vec {
    const double z = (x(0) - t(0)) / t(1);
    Vec v(2);
    v << ls.psi1(z), ls.psi2(z);
    return v;
  };
  s.psi_jac_theta = [ls](const Eigen::Ref<const Vec>& x, const Vec& t) -> Mat {
    const double S = t(1);
    const double z = (x(0) - t(0)) / S;
    const double d1 = ls.dpsi1(z), d2 = ls.dpsi2(z);
    Mat j(2, 2);
    j << -d1 / S, -z * d1 / S, -d2 / S, -z * d2 / S;
    return j;
  };
  s.psi_jac_x = [ls](const Eigen::Ref<const Vec>& x, const Vec& t) -> Mat {
    const double S = t(1);
    const double z = (x(0) - t(0)) / S;
    Mat j(2, 1);
    j << ls.dpsi1(z) / S, ls.dpsi2(z) / S;
    return j;
  };
  return s;
}

AbcdStats abcd_stats(const LocationScaleSpec& spec, const Vec& data, double T, double S) {
  AbcdStats st;
  for (Eigen::Index n = 0; n < data.size(); ++n) {
    const double z = (data(n) - T) / S;
    const double d1 = spec.dpsi1(z), d2 = spec.dpsi2(z);
    st.a += d1;
    st.b += z * d1;
    st.c += d2;
    st.d += z * d2;
  }
  return st;
}

namespace {

DataMatrix as_row(const Vec& data) { return DataMatrix(Mat(data.transpose())); }

}  // namespace

Huber2Fit huber_proposal2_stats(const Vec& data, double K, double alpha, double beta) {
  const LocationScaleSpec spec = huber2_spec(K, alpha, beta);
  const Vec t = solve(to_mestimator(spec), as_row(data));
  Huber2Fit f;
  f.T = t(0);
  f.S = t(1);
  const int N = static_cast<int>(data.size());
  double sum_B_z = 0.0;
  for (int n = 0; n < N; ++n) {
    const double z = (data(n) - f.T) / f.S;
    if (std::abs(z) <= K)
      ++f.n_A;
    else if (z < 0)
      ++f.n_A_minus;
    else
      ++f.n_A_plus;
    if (z * z <= alpha * alpha) {
      ++f.n_B;
      sum_B_z += z;
    }
  }
  if (f.n_A == 0) fail(ErrorKind::DegenerateEstimate, "every point is clipped in psi1");
  f.stats.a = f.n_A;
  f.stats.b = K * (f.n_A_minus - f.n_A_plus);
  f.stats.c = 2.0 * sum_B_z;
  f.stats.d = 2.0 * (N * beta - (N - f.n_B) * alpha * alpha);
  return f;
}

AifReport ls_aif_at(const LocationScaleSpec& spec, const Vec& data, double T, double S, double p) {
  check_p(p);
  const int N = static_cast<int>(data.size());
  if (N < 2) fail(ErrorKind::ConfigError, "location-scale AIF needs N >= 2");
  if (!(S > 0)) fail(ErrorKind::DegenerateEstimate, "scale estimate must be positive");
  const AbcdStats st = abcd_stats(spec, data, T, S);
  const double det = st.a * st.d - st.b * st.c;
  if (!(std::abs(det) >= 1e-12 * N * static_cast<double>(N)))
    fail(ErrorKind::DegenerateEstimate, fmt::format("ad - bc = {} is degenerate", det));
  Vec d1(N), d2(N);
  for (int n = 0; n < N; ++n) {
    const double z = (data(n) - T) / S;
    d1(n) = spec.dpsi1(z);
    d2(n) = spec.dpsi2(z);
  }
  std::vector<Vec> sigmas, rows;
  for (double s2 : {1.0, -1.0}) {
    Vec s(2);
    s << 1.0, s2;
    sigmas.push_back(s);
    rows.push_back(-((st.d - s2 * st.c) * d1 + (s2 * st.a - st.b) * d2) / det);
  }
  AifReport r = aif_from_rows(sigmas, rows, 1, N, p);
  r.theta = Vec(2);
  r.theta << T, S;
  r.jac.g_theta = Mat(2, 2);
  r.jac.g_theta << st.a, st.b, st.c, st.d;
  r.jac.g_theta *= -1.0 / S;
  r.jac.g_x = Mat(2, N);
  r.jac.g_x.row(0) = d1.transpose() / S;
  r.jac.g_x.row(1) = d2.transpose() / S;
  Eigen::JacobiSVD<Mat> svd(r.jac.g_theta);
  r.jac.condition = svd.singularValues()(0) / svd.singularValues()(1);
  return r;
}

AifReport ls_aif(const LocationScaleSpec& spec, const Vec& data, double p) {
  check_p(p);
  if (data.size() < 2) fail(ErrorKind::ConfigError, "location-scale AIF needs N >= 2");
  const Vec t = solve(to_mestimator(spec), as_row(data));
  return ls_aif_at(spec, data, t(0), t(1), p);
}

double population_scale(const LocationScaleSpec& spec, const BaseDensity& f0) {
  auto mean_psi2 = [&](double S) {
    std::vector<double> bp;
    for (double k : spec.kinks) bp.push_back(k * S);
    for (double k : f0.kinks) bp.push_back(k);
    return expect(f0, [&](double z) { return spec.psi2(z / S); }, bp);
  };
  const double at1 = mean_psi2(1.0);
  if (std::abs(at1) <= 1e-13) return 1.0;
  // E psi2(Z / S) falls as S grows; search on log S
  auto f = [&](double u) { return mean_psi2(std::exp(u)); };
  double lo = 0.0, hi = 0.0;
  if (at1 > 0) {
    hi = 1.0;
    while (f(hi) > 0) {
      hi *= 2;
      if (hi > 64) fail(ErrorKind::DegenerateEstimate, "population scale not bracketed");
    }
  } else {
    lo = -1.0;
    while (f(lo) < 0) {
      lo *= 2;
      if (lo < -64) fail(ErrorKind::DegenerateEstimate, "population scale not bracketed");
    }
  }
  return std::exp(find_root(f, lo, hi, 1e-15, 300));
}

namespace {

// E g(Z / S) with the estimator's population scale S
struct Standardized {
  const LocationScaleSpec& spec;
  const BaseDensity& f0;
  double S;
  std::vector<double> bp;
  Standardized(const LocationScaleSpec& s, const BaseDensity& f)
      : spec(s), f0(f), S(population_scale(s, f)) {
    for (double k : spec.kinks) bp.push_back(k * S);
    for (double k : f0.kinks) bp.push_back(k);
  }
  double operator()(const std::function<double(double)>& g) const {
    return expect(f0, [&](double z) { return g(z / S); }, bp);
  }
};

}  // namespace

double population_aif(const LocationScaleSpec& spec, const BaseDensity& f0) {
  const Standardized E(spec, f0);
  const double e1 = E(spec.dpsi1);
  const double e11 = E([&](double z) { const double v = spec.dpsi1(z); return v * v; });
  const double e22 = E([&](double z) { const double v = spec.dpsi2(z); return v * v; });
  const double ez2 = E([&](double z) { return z * spec.dpsi2(z); });
  if (e1 == 0.0 || ez2 == 0.0)
    fail(ErrorKind::DegenerateEstimate, "population normalizers vanish");
  return std::sqrt(e11 / (e1 * e1) + e22 / (ez2 * ez2));
}

OddMoments population_odd_moments(const LocationScaleSpec& spec, const BaseDensity& f0) {
  const Standardized E(spec, f0);
  OddMoments o;
  o.z_dpsi1 = E([&](double z) { return z * spec.dpsi1(z); });
  o.dpsi2 = E(spec.dpsi2);
  o.dpsi1_dpsi2 = E([&](double z) { return spec.dpsi1(z) * spec.dpsi2(z); });
  return o;
}

IfProfile ls_if_profile(const LocationScaleSpec& spec, const BaseDensity& f0) {
  const Standardized E(spec, f0);
  IfProfile r;
  r.B1 = E(spec.dpsi1);
  r.B2 = E([&](double z) { return z * spec.dpsi2(z); });
  if (std::isinf(spec.psi1_limit) || std::isinf(spec.psi2_limit)) {
    r.gamma_u = kInf;
    return r;
  }
  // IF in data units carries the factor S
  const double at0 = E.S * spec.psi2(0.0) / r.B2;
  const double atinf = E.S * std::hypot(spec.psi1_limit / r.B1, spec.psi2_limit / r.B2);
  r.gamma_u = std::max(std::abs(at0), atinf);
  return r;
}

std::vector<McRow> monte_carlo_population_check(const LocationScaleSpec& spec,
                                                const BaseDensity& f0,
                                                const std::vector<int>& N_grid,
                                                std::uint64_t seed, int replicates) {
  if (replicates < 1) fail(ErrorKind::ConfigError, "need at least one replicate");
  for (int N : N_grid)
    if (N < 2) fail(ErrorKind::ConfigError, "sample size must be at least 2");
  const double pop = population_aif(spec, f0);
  std::vector<McRow> out;
  for (int N : N_grid) {
    std::vector<double> vals(replicates, 0.0);
    std::vector<char> ok(replicates, 0);
    parallel_for(replicates, [&](int r) {
      auto rng = make_stream(seed, {static_cast<std::uint64_t>(N), static_cast<std::uint64_t>(r)});
      Vec x(N);
      for (int n = 0; n < N; ++n) x(n) = f0.sample(rng);
      try {
        vals[r] = ls_aif(spec, x, 2.0).aif;
        ok[r] = 1;
      } catch (const AifError&) {
      }
    });
    McRow row;
    row.N = N;
    row.population = pop;
    std::vector<double> errs;
    double sum = 0;
    for (int r = 0; r < replicates; ++r) {
      if (!ok[r]) {
        ++row.n_fail;
        continue;
      }
      sum += vals[r];
      errs.push_back(std::abs(vals[r] - pop));
    }
    row.replicates = static_cast<int>(errs.size());
    if (!errs.empty()) {
      row.mean_aif = sum / errs.size();
      double e = 0;
      for (double v : errs) e += v;
      row.mean_abs_err = e / errs.size();
      double s2 = 0;
      for (double v : errs) s2 += (v - row.mean_abs_err) * (v - row.mean_abs_err);
      row.stderr_err = errs.size() > 1 ? std::sqrt(s2 / (errs.size() - 1) / errs.size()) : 0.0;
      row.rel_err = row.mean_abs_err / pop;
    }
    out.push_back(row);
  }
  return out;
}

}  // namespace aiflab
