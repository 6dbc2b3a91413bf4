#include "aiflab/regression.hpp"

#include <cmath>
#include <fmt/format.h>
#include <optional>

#include "aiflab/errors.hpp"
#include "aiflab/numerics.hpp"
#include "aiflab/parallel.hpp"

namespace aiflab {

DataMatrix RegressionData::stacked() const {
  Mat s(q() + 1, N());
  s.topRows(q()) = x;
  s.row(q()) = y.transpose();
  return DataMatrix(std::move(s));
}

RegressionData RegressionData::from_stacked(const DataMatrix& d) {
  if (d.m() < 2) fail(ErrorKind::DimensionError, "regression data needs q + 1 >= 2 columns");
  RegressionData r;
  r.x = d.x().topRows(d.m() - 1);
  r.y = d.x().row(d.m() - 1).transpose();
  return r;
}

SchemeKind parse_scheme(const std::string& name) {
  if (name == "ols") return SchemeKind::OLS;
  if (name == "huber") return SchemeKind::Huber;
  if (name == "mallows") return SchemeKind::Mallows;
  if (name == "schweppe") return SchemeKind::Schweppe;
  fail(ErrorKind::ConfigError, fmt::format("unknown scheme '{}'", name));
}

std::string scheme_name(SchemeKind k) {
  switch (k) {
    case SchemeKind::OLS: return "ols";
    case SchemeKind::Huber: return "huber";
    case SchemeKind::Mallows: return "mallows";
    case SchemeKind::Schweppe: return "schweppe";
  }
  return "?";
}

double huber_eta(double u, double K) { return std::max(-K, std::min(K, u)); }
double huber_eta_prime(double u, double K) { return std::abs(u) <= K ? 1.0 : 0.0; }

namespace {

// Factorization of A = X X^T shared by the leverage computations.
struct LeverageContext {
  const Mat& X;
  Mat Ainv;
  Vec h;

  explicit LeverageContext(const Mat& x) : X(x) {
    const int q = static_cast<int>(X.rows());
    if (X.cols() < q) fail(ErrorKind::SingularDesign, "need N >= q for X X^T to be invertible");
    Mat A = X * X.transpose();
    Eigen::LDLT<Mat> ldlt(A);
    Eigen::JacobiSVD<Mat> svd(A);
    const auto& s = svd.singularValues();
    if (ldlt.info() != Eigen::Success || s(q - 1) <= 1e-13 * s(0))
      fail(ErrorKind::SingularDesign, "X X^T is singular");
    Ainv = ldlt.solve(Mat::Identity(q, q));
    h = (X.transpose() * Ainv).cwiseProduct(X.transpose()).rowwise().sum();
  }

  // (X X^T - x_j x_j^T)^{-1} by a Sherman-Morrison downdate
  Mat loo_inverse(int j) const {
    const double slack = 1.0 - h(j);
    if (!(slack > 1e-12))
      fail(ErrorKind::SingularDesign,
           fmt::format("removing point {} makes X X^T singular (h = {})", j, h(j)));
    const Vec u = Ainv * X.col(j);
    return Ainv + u * u.transpose() / slack;
  }

  // d h_nn / d x_{j,k}, all n, given BX = loo_inverse(j) * X
  Vec partials(const Mat& BX, int j, int k) const {
    const int N = static_cast<int>(X.cols());
    const double s = 1.0 + X.col(j).dot(BX.col(j));
    const double bjk = BX(k, j);
    Vec out(N);
    for (int n = 0; n < N; ++n) {
      if (n == j) {
        out(n) = 2.0 * bjk / (s * s);
      } else {
        const double u = X.col(n).dot(BX.col(j));
        out(n) = -(2.0 * u * BX(k, n) * s - 2.0 * u * u * bjk) / (s * s);
      }
    }
    return out;
  }
};

struct Weights {
  Vec w, v, dw_dh, dv_dh;
};

Weights weights_from_h(const Vec& h, SchemeKind kind) {
  const int N = static_cast<int>(h.size());
  Weights W{Vec::Ones(N), Vec::Ones(N), Vec::Zero(N), Vec::Zero(N)};
  if (kind != SchemeKind::Mallows && kind != SchemeKind::Schweppe) return W;
  for (int n = 0; n < N; ++n) {
    const double one_minus = 1.0 - h(n);
    if (!(one_minus > 1e-12))
      fail(ErrorKind::SingularDesign, fmt::format("leverage of point {} is 1", n));
    const double w = std::sqrt(one_minus);
    W.w(n) = w;
    W.dw_dh(n) = -0.5 / w;
    if (kind == SchemeKind::Schweppe) {
      W.v(n) = 1.0 / w;
      W.dv_dh(n) = 0.5 / (one_minus * w);
    }
  }
  return W;
}

double scheme_K(const RegressionScheme& s) {
  return s.kind == SchemeKind::OLS ? kInf : s.K;
}

}  // namespace

Vec leverages(const RegressionData& data) { return LeverageContext(data.x).h; }

Vec leverage_partials(const RegressionData& data, int j, int k) {
  if (j < 0 || j >= data.N() || k < 0 || k >= data.q())
    fail(ErrorKind::DimensionError, "leverage_partials index out of range");
  LeverageContext ctx(data.x);
  return ctx.partials(ctx.loo_inverse(j) * data.x, j, k);
}

void scheme_weights(const RegressionData& data, const RegressionScheme& scheme, Vec& w, Vec& v) {
  Vec h = scheme.kind == SchemeKind::Mallows || scheme.kind == SchemeKind::Schweppe
              ? leverages(data)
              : Vec::Zero(data.N());
  Weights W = weights_from_h(h, scheme.kind);
  w = W.w;
  v = W.v;
}

Vec scheme_c(const RegressionData& data, const RegressionScheme& scheme, const Vec& theta) {
  Vec w, v;
  scheme_weights(data, scheme, w, v);
  const double K = scheme_K(scheme);
  const Vec r = data.y - data.x.transpose() * theta;
  Vec c(data.N());
  for (int n = 0; n < data.N(); ++n) c(n) = w(n) * huber_eta_prime(r(n) * v(n), K) * v(n);
  return c;
}

namespace {

Vec reg_G(const RegressionScheme& scheme, const DataMatrix& d, const Vec& theta) {
  const RegressionData data = RegressionData::from_stacked(d);
  Vec w, v;
  scheme_weights(data, scheme, w, v);
  const double K = scheme_K(scheme);
  const Vec r = data.y - data.x.transpose() * theta;
  Vec g = Vec::Zero(data.q());
  for (int n = 0; n < data.N(); ++n) g += huber_eta(r(n) * v(n), K) * w(n) * data.x.col(n);
  return g;
}

Mat reg_G_theta(const RegressionScheme& scheme, const DataMatrix& d, const Vec& theta) {
  const RegressionData data = RegressionData::from_stacked(d);
  const Vec c = scheme_c(data, scheme, theta);
  return -(data.x * c.asDiagonal() * data.x.transpose());
}

Mat reg_G_x(const RegressionScheme& scheme, const DataMatrix& d, const Vec& theta) {
  const RegressionData data = RegressionData::from_stacked(d);
  const int q = data.q(), N = data.N(), m = q + 1;
  const double K = scheme_K(scheme);
  const bool leverage_weighted =
      scheme.kind == SchemeKind::Mallows || scheme.kind == SchemeKind::Schweppe;
  std::optional<LeverageContext> ctx;
  Vec h = Vec::Zero(N);
  if (leverage_weighted) {
    ctx.emplace(data.x);
    h = ctx->h;
  }
  const Weights W = weights_from_h(h, scheme.kind);
  const Vec r = data.y - data.x.transpose() * theta;
  Vec eta(N), deta(N);
  for (int n = 0; n < N; ++n) {
    eta(n) = huber_eta(r(n) * W.v(n), K);
    deta(n) = huber_eta_prime(r(n) * W.v(n), K);
  }

  Mat J = Mat::Zero(q, static_cast<Eigen::Index>(m) * N);
  for (int j = 0; j < N; ++j) {
    const double cj = W.w(j) * deta(j) * W.v(j);
    J.col(j * m + q) = cj * data.x.col(j);
    Mat BX;
    if (leverage_weighted) BX = ctx->loo_inverse(j) * data.x;
    for (int k = 0; k < q; ++k) {
      Vec col = Vec::Zero(q);
      // direct dependence of r_j on x_{j,k}
      col += W.w(j) * deta(j) * (-theta(k) * W.v(j)) * data.x.col(j);
      // the covariate factor x_{j,i} itself
      col(k) += W.w(j) * eta(j);
      if (leverage_weighted) {
        const Vec dh = ctx->partials(BX, j, k);
        for (int n = 0; n < N; ++n) {
          const double dw = W.dw_dh(n) * dh(n);
          const double dv = W.dv_dh(n) * dh(n);
          col += (eta(n) * dw + W.w(n) * deta(n) * r(n) * dv) * data.x.col(n);
        }
      }
      J.col(j * m + k) = col;
    }
  }
  return J;
}

}  // namespace

EstimatingSystem regression_system(const RegressionScheme& scheme, int q) {
  if (scheme.kind != SchemeKind::OLS && !(scheme.K > 0))
    fail(ErrorKind::ConfigError, "clip level K must be positive");
  EstimatingSystem s;
  s.m = q + 1;
  s.q = q;
  s.name = scheme_name(scheme.kind);
  s.G = [scheme](const DataMatrix& d, const Vec& t) { return reg_G(scheme, d, t); };
  s.G_theta = [scheme](const DataMatrix& d, const Vec& t) { return reg_G_theta(scheme, d, t); };
  s.G_x = [scheme](const DataMatrix& d, const Vec& t) { return reg_G_x(scheme, d, t); };
  s.initial = [](const DataMatrix& d) { return ols_start(d); };
  return s;
}

MEstimatorSpec regression_point_spec(const RegressionScheme& scheme, int q) {
  if (scheme.kind == SchemeKind::Mallows || scheme.kind == SchemeKind::Schweppe)
    fail(ErrorKind::ConfigError, "leverage-weighted schemes have no per-point form");
  const double K = scheme_K(scheme);
  MEstimatorSpec s;
  s.m = q + 1;
  s.q = q;
  s.name = scheme_name(scheme.kind);
  s.init = InitRule::Regression;
  s.psi = [K, q](const Eigen::Ref<const Vec>& xt, const Vec& th) -> Vec {
    const double r = xt(q) - xt.head(q).dot(th);
    return huber_eta(r, K) * xt.head(q);
  };
  s.psi_jac_theta = [K, q](const Eigen::Ref<const Vec>& xt, const Vec& th) -> Mat {
    const double r = xt(q) - xt.head(q).dot(th);
    const Vec x = xt.head(q);
    return -huber_eta_prime(r, K) * x * x.transpose();
  };
  s.psi_jac_x = [K, q](const Eigen::Ref<const Vec>& xt, const Vec& th) -> Mat {
    const double r = xt(q) - xt.head(q).dot(th);
    const Vec x = xt.head(q);
    const double e = huber_eta(r, K), de = huber_eta_prime(r, K);
    Mat j(q, q + 1);
    j.leftCols(q) = e * Mat::Identity(q, q) - de * x * th.transpose();
    j.col(q) = de * x;
    return j;
  };
  return s;
}

AifReport regression_aif(const RegressionData& data, const RegressionScheme& scheme, double p) {
  check_p(p);
  const DataMatrix d = data.stacked();
  const EstimatingSystem sys = regression_system(scheme, data.q());
  const Vec theta = solve(sys, d);
  const Vec c = scheme_c(data, scheme, theta);
  if (c.cwiseAbs().maxCoeff() == 0.0)
    fail(ErrorKind::DegenerateEstimate, "every residual is clipped");
  const Mat XcX = data.x * c.asDiagonal() * data.x.transpose();
  Eigen::ColPivHouseholderQR<Mat> qr(XcX);
  qr.setThreshold(1e-12);
  if (qr.rank() < data.q())
    fail(ErrorKind::DegenerateEstimate, "X diag(c) X^T is rank deficient");
  StackedJacobians jac;
  jac.g_theta = -XcX;
  jac.g_x = sys.G_x(d, theta);
  Eigen::JacobiSVD<Mat> svd(jac.g_theta);
  const auto& s = svd.singularValues();
  jac.condition = s(0) / s(s.size() - 1);
  AifReport r = aif_from_jacobians(jac, d.m(), d.N(), p);
  r.theta = theta;
  return r;
}

std::vector<SweepRow> aif_vs_K_sweep(const std::vector<RegressionData>& datasets,
                                     const std::vector<SchemeKind>& schemes,
                                     const std::vector<double>& K_grid, double p) {
  check_p(p);
  std::vector<SweepRow> rows;
  const int R = static_cast<int>(datasets.size());
  for (SchemeKind kind : schemes) {
    // OLS does not depend on K: compute once per dataset
    std::vector<double> ols_vals;
    std::vector<char> ols_ok;
    if (kind == SchemeKind::OLS) {
      ols_vals.assign(R, 0.0);
      ols_ok.assign(R, 0);
      parallel_for(R, [&](int i) {
        try {
          ols_vals[i] = regression_aif(datasets[i], {SchemeKind::OLS, kInf}, p).aif;
          ols_ok[i] = 1;
        } catch (const AifError&) {
        }
      });
    }
    for (double K : K_grid) {
      std::vector<double> vals(R, 0.0);
      std::vector<char> ok(R, 0);
      if (kind == SchemeKind::OLS) {
        vals = ols_vals;
        ok = ols_ok;
      } else {
        parallel_for(R, [&](int i) {
          try {
            vals[i] = regression_aif(datasets[i], {kind, K}, p).aif;
            ok[i] = 1;
          } catch (const AifError&) {
          }
        });
      }
      SweepRow row;
      row.scheme = scheme_name(kind);
      row.K = K;
      double sum = 0, sum2 = 0;
      for (int i = 0; i < R; ++i) {
        if (!ok[i]) {
          ++row.n_fail;
          continue;
        }
        ++row.n_ok;
        sum += vals[i];
      }
      if (row.n_ok > 0) row.mean_aif = sum / row.n_ok;
      for (int i = 0; i < R; ++i)
        if (ok[i]) sum2 += (vals[i] - row.mean_aif) * (vals[i] - row.mean_aif);
      row.stderr_aif = row.n_ok > 1 ? std::sqrt(sum2 / (row.n_ok - 1) / row.n_ok) : 0.0;
      if (row.n_ok == 0) row.mean_aif = std::nan("");
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace aiflab
