#include "oracles.hpp"

#include <algorithm>
#include <cmath>

namespace oracle {

Mat fd4_jacobian(const std::function<Vec(const Vec&)>& F, const Vec& x, double h) {
  const Vec f0 = F(x);
  Mat J(f0.size(), x.size());
  for (int i = 0; i < x.size(); ++i) {
    const double s = h * std::max(1.0, std::abs(x(i)));
    auto at = [&](double k) {
      Vec y = x;
      y(i) += k * s;
      return F(y);
    };
    J.col(i) = (-at(2) + 8 * at(1) - 8 * at(-1) + at(-2)) / (12 * s);
  }
  return J;
}

aiflab::EstimatingSystem fd_system(const aiflab::EstimatingSystem& base, double h) {
  aiflab::EstimatingSystem s = base;
  const auto G = base.G;
  s.name = base.name + "/fd";
  s.G_theta = [G, h](const aiflab::DataMatrix& d, const Vec& th) {
    return fd4_jacobian([&](const Vec& t) { return G(d, t); }, th, h);
  };
  s.G_x = [G, h](const aiflab::DataMatrix& d, const Vec& th) {
    const int m = d.m(), N = d.N();
    const Vec flat = Eigen::Map<const Vec>(d.x().data(), d.x().size());
    return fd4_jacobian(
        [&](const Vec& f) { return G(aiflab::DataMatrix(Eigen::Map<const Mat>(f.data(), m, N)), th); },
        flat, h);
  };
  return s;
}

QpResult diagonal_qp(const Vec& qx, const Mat& A_eq, const Vec& b_eq, const Mat& A_in,
                     const Vec& b_in) {
  const int nx = static_cast<int>(qx.size());
  const int ni = static_cast<int>(A_in.rows());
  const int me = static_cast<int>(A_eq.rows());
  const int n = nx + ni, m = me + ni;
  Mat A = Mat::Zero(m, n);
  Vec b(m);
  if (me) {
    A.topLeftCorner(me, nx) = A_eq;
    b.head(me) = b_eq;
  }
  if (ni) {
    A.bottomLeftCorner(ni, nx) = A_in;
    A.bottomRightCorner(ni, ni).setIdentity();
    b.tail(ni) = b_in;
  }
  Vec q = Vec::Zero(n);
  q.head(nx) = qx;

  Vec v = Vec::Ones(n), z = Vec::Ones(n), y = Vec::Zero(m);
  const double bscale = 1.0 + b.cwiseAbs().maxCoeff();
  const double qscale = 1.0 + q.cwiseAbs().maxCoeff();
  QpResult out;

  auto solve_dir = [&](const Vec& rd, const Vec& rp, const Vec& rc, Vec& dv, Vec& dy, Vec& dz) {
    const Vec D = q.array() + z.array() / v.array();
    const Vec Dinv = D.cwiseInverse();
    const Mat M = A * Dinv.asDiagonal() * A.transpose();
    const Vec t = (rc.array() / v.array()).matrix() - rd;
    dy = M.ldlt().solve(rp - A * Dinv.asDiagonal() * t);
    dv = Dinv.asDiagonal() * (A.transpose() * dy + t);
    dz = ((rc - (z.array() * dv.array()).matrix()).array() / v.array()).matrix();
  };
  auto max_step = [](const Vec& x, const Vec& dx) {
    double a = 1.0;
    for (int i = 0; i < x.size(); ++i)
      if (dx(i) < 0) a = std::min(a, -x(i) / dx(i));
    return a;
  };

  for (int it = 0; it < 300; ++it) {
    const Vec rd = (q.array() * v.array()).matrix() - A.transpose() * y - z;
    const Vec rp = b - A * v;
    const double mu = v.dot(z) / n;
    out.iterations = it;
    out.residual = std::max(rp.cwiseAbs().maxCoeff() / bscale, rd.cwiseAbs().maxCoeff() / qscale);
    if (out.residual < 1e-11 && mu < 1e-13) {
      out.converged = true;
      break;
    }
    Vec dv, dy, dz;
    const Vec vz = (v.array() * z.array()).matrix();
    solve_dir(rd, rp, -vz, dv, dy, dz);
    const double ap = max_step(v, dv), ad = max_step(z, dz);
    const double mu_aff = (v + ap * dv).dot(z + ad * dz) / n;
    const double sigma = std::pow(mu_aff / mu, 3.0);
    const Vec rc = (Vec::Constant(n, sigma * mu) - vz).array() - dv.array() * dz.array();
    solve_dir(rd, rp, rc, dv, dy, dz);
    const double alpha = std::min(1.0, 0.99 * std::min(max_step(v, dv), max_step(z, dz)));
    v += alpha * dv;
    y += alpha * dy;
    z += alpha * dz;
  }
  out.x = v.head(nx);
  out.objective = 0.5 * (qx.array() * out.x.array().square()).sum();
  return out;
}

DiscreteDesign discrete_design(const aiflab::BaseDensity& f0, const aiflab::PsiDesign& d, int knots) {
  const double zmax = std::isfinite(f0.support_end) ? f0.support_end : f0.upper_quantile(1e-9);
  Vec z(knots), w(knots), f(knots), W1(knots), W2(knots);
  const double step = zmax / (knots - 1);
  const bool exact = d.convention == aiflab::FisherConvention::Exact;
  for (int i = 0; i < knots; ++i) {
    z(i) = step * i;
    w(i) = (i == 0 || i == knots - 1) ? 0.5 * step : step;
    f(i) = f0.pdf(z(i));
    const double F = f0.cdf(z(i)), S = 1.0 - F;
    W1(i) = exact ? 2.0 * F - 1.0 : F;
    W2(i) = exact ? 2.0 * S : S;
  }
  const Vec wf = w.cwiseProduct(f);

  DiscreteDesign out;
  // location part: min int h^2 f subject to int h f = 1 and int h <= 2 xi1
  Mat Aeq = wf.transpose();
  Vec beq = Vec::Ones(1);
  Mat Ain(0, knots);
  Vec bin(0);
  if (d.constrained) {
    Ain = w.transpose();
    bin = Vec::Constant(1, 2.0 * d.xi1);
  }
  const QpResult loc = diagonal_qp(2.0 * wf, Aeq, beq, Ain, bin);
  // scale part: min int g^2 f subject to int z g f = 1, int g W1 <= 2 xi2, int g W2 <= 2 xi
  Aeq = w.cwiseProduct(z).cwiseProduct(f).transpose();
  if (d.constrained) {
    Ain = Mat(2, knots);
    Ain.row(0) = w.cwiseProduct(W1).transpose();
    Ain.row(1) = w.cwiseProduct(W2).transpose();
    bin = Vec(2);
    bin << 2.0 * d.xi2, 2.0 * d.xi;
  }
  const QpResult sc = diagonal_qp(2.0 * wf, Aeq, beq, Ain, bin);
  out.location_term = loc.objective / 2.0;
  out.scale_term = sc.objective / 2.0;
  out.aif = std::sqrt(out.location_term + out.scale_term);
  out.converged = loc.converged && sc.converged;
  return out;
}

}  // namespace oracle
