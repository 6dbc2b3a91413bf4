#include "aiflab/designer.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <memory>

#include "aiflab/errors.hpp"
#include "aiflab/parallel.hpp"

namespace aiflab {

FisherConvention parse_convention(const std::string& s) {
  if (s == "stated") return FisherConvention::Stated;
  if (s == "exact") return FisherConvention::Exact;
  fail(ErrorKind::ConfigError, fmt::format("unknown convention '{}' (stated|exact)", s));
}

std::string convention_name(FisherConvention c) {
  return c == FisherConvention::Stated ? "stated" : "exact";
}

double DesignKkt::max() const {
  return std::max({norm1, norm2, slack1, slack2, slack3, primal, dual, clamp});
}

namespace {

constexpr double kQuadTol = 1e-13;

QuadOptions tight() {
  QuadOptions o;
  o.rel_tol = kQuadTol;
  o.abs_tol = 1e-14;
  return o;
}

double quad(const ScalarFn& f, double a, double b, std::vector<double> bp = {}) {
  if (!(b > a)) return 0.0;
  return integrate(f, a, b, bp, tight());
}

// Largest z worth scanning: the density is below ~1e-16 of its mass beyond it.
double scan_end(const BaseDensity& f0) {
  if (std::isfinite(f0.support_end)) return f0.support_end;
  return f0.upper_quantile(1e-16);
}

double W1(const BaseDensity& f0, FisherConvention c, double z) {
  return c == FisherConvention::Stated ? 0.5 + f0.mass0(z) : 2.0 * f0.mass0(z);
}

double W2(const BaseDensity& f0, FisherConvention c, double z) {
  return c == FisherConvention::Stated ? f0.sf(z) : 2.0 * f0.sf(z);
}

void require_decreasing(const BaseDensity& f0) {
  if (f0.kind != DensityKind::Table) return;
  double prev = f0.pdf(0.0);
  for (double k : f0.kinks) {
    const double v = f0.pdf(k);
    if (v > prev * (1 + 1e-12))
      fail(ErrorKind::ConfigError, "designer needs a density that is nonincreasing on z >= 0");
    prev = v;
  }
}

// ---------- psi1 ----------

double laplace_F(double a, double xi1) {
  return std::exp(a) * (xi1 + 1.0 - a) - (1.0 + (a + 1.0) * xi1);
}

}  // namespace

double xi1_floor(const BaseDensity& f0) { return 1.0 / (2.0 * f0.pdf(0.0)); }

double laplace_a1_residual(double a, double xi1) {
  const double rhs = (1.0 + (a + 1.0) * xi1) / (xi1 + 1.0 - a);
  return std::abs(std::exp(a) - rhs) / std::exp(a);
}

double laplace_a1(double xi1) {
  if (!(xi1 > 1.0))
    fail(ErrorKind::Infeasible,
         fmt::format("xi1 = {} is at or below the Laplace floor 1: the only root is a1 = 0", xi1));
  // F(a) ~ (xi1 - 1) a^2 / 2 near 0, F(xi1 + 1) < 0
  double lo = std::min(1e-2, 0.5 * (xi1 - 1.0));
  while (laplace_F(lo, xi1) <= 0.0) {
    lo *= 0.1;
    if (lo < 1e-12) fail(ErrorKind::Infeasible, "xi1 too close to the Laplace floor");
  }
  const double hi = xi1 + 1.0;
  return find_root([xi1](double a) { return laplace_F(a, xi1); }, lo, hi, 0.0, 300);
}

Psi1Solution solve_psi1(const BaseDensity& f0, double xi1) {
  require_decreasing(f0);
  Psi1Solution s;
  if (f0.kind == DensityKind::Laplace) {
    const double a = laplace_a1(xi1);
    s.a = a;
    s.nu = (2.0 + 2.0 * (a + 1.0) * xi1) / (a * a);
    s.theta = (xi1 - a + 1.0) / (a * a);
    return s;
  }
  const double floor = xi1_floor(f0);
  if (!(xi1 > floor))
    fail(ErrorKind::Infeasible,
         fmt::format("xi1 = {} is at or below the floor 1/(2 f0(0)) = {}", xi1, floor));
  auto D = [&](double a) { return f0.mass0(a) - a * f0.pdf(a); };
  auto L = [&](double a) {
    const double fa = f0.pdf(a);
    return quad([&](double z) { return 1.0 - fa / f0.pdf(z); }, 0.0, a, f0.kinks);
  };
  auto F = [&](double a) { return L(a) - 2.0 * xi1 * D(a); };
  double lo = 1e-2;
  while (!(F(lo) < 0.0)) {
    lo *= 0.1;
    if (lo < 1e-7) fail(ErrorKind::Infeasible, "xi1 too close to the feasibility floor");
  }
  const double end = scan_end(f0);
  double hi = std::min(1.0, end);
  while (F(hi) < 0.0) {
    if (hi >= end) fail(ErrorKind::BracketError, "psi1 breakpoint not bracketed");
    hi = std::min(2.0 * hi, end);
  }
  const double a = find_root(F, lo, hi, 0.0, 300);
  s.a = a;
  s.nu = 1.0 / D(a);
  s.theta = f0.pdf(a) * s.nu;
  return s;
}

// ---------- psi2 ----------

namespace {

struct RatioFn {
  const BaseDensity& f0;
  FisherConvention conv;
  double operator()(double z) const { return W1(f0, conv, z) / (z * f0.pdf(z)); }
};

struct RShape {
  double zstar = 0;   // minimizer of R (0 when R increases from z = 0)
  double rmin = 0;    // inf R
  bool starts_at_zero = false;
};

RShape r_shape(const BaseDensity& f0, FisherConvention conv) {
  RatioFn R{f0, conv};
  const double end = scan_end(f0);
  // coarse scan on a grid dense near 0, then golden refinement
  const int n = 400;
  auto zi = [&](int i) { return end * std::pow(static_cast<double>(i) / n, 2.0); };
  int best_i = 1;
  double best = kInf;
  for (int i = 1; i < n; ++i) {
    const double v = R(zi(i));
    if (v < best) {
      best = v;
      best_i = i;
    }
  }
  const double lo = best_i > 1 ? zi(best_i - 1) : 1e-12;
  const double hi = zi(best_i + 1);
  auto gr = golden_section_min(R, lo, hi, 1e-11);
  RShape s;
  s.zstar = gr.x;
  s.rmin = gr.fx;
  const double at0 = R(1e-9);
  if (at0 <= s.rmin * (1 + 1e-9) || s.zstar < 1e-7) {
    s.starts_at_zero = true;
    s.zstar = 0.0;
    s.rmin = at0;
  }
  return s;
}

struct Support {
  double a2 = 0, b = 0;
};

Support support_for_rho(const BaseDensity& f0, FisherConvention conv, const RShape& shape,
                        double rho) {
  RatioFn R{f0, conv};
  auto f = [&](double z) { return R(z) - rho; };
  Support s;
  const double end = scan_end(f0);
  if (shape.starts_at_zero) {
    s.a2 = 0.0;
  } else {
    s.a2 = find_root(f, 1e-12, shape.zstar, 0.0, 300);
  }
  const double from = std::max({shape.zstar, s.a2, 1e-9});
  double hi = std::max(from * 1.5, from + 0.5);
  while (hi < end && f(hi) < 0.0) hi = std::min(end, from + 2.0 * (hi - from));
  if (f(hi) < 0.0) {
    s.b = end;
  } else {
    s.b = find_root(f, from, hi, 0.0, 300);
  }
  return s;
}

struct Psi2Integrals {
  double C0 = 0;  // int z g f0
  double C1 = 0;  // int g W1
  double C2 = 0;  // int g W2
  double J = 0;   // int g^2 f0
  double G = 0;   // int g
};

// support intervals of u(z) = nu z f0 - th1 W1 - th2 W2 > 0 on [0, end]
std::vector<std::pair<double, double>> positive_set(const std::function<double(double)>& u,
                                                    double end) {
  const int n = 2000;
  std::vector<std::pair<double, double>> out;
  double prevz = 0.0, prevu = u(0.0);
  double start = prevu > 0 ? 0.0 : -1.0;
  for (int i = 1; i <= n; ++i) {
    const double z = end * std::pow(static_cast<double>(i) / n, 1.5);
    const double v = u(z);
    if ((v > 0) != (prevu > 0)) {
      const double r = find_root(u, prevz, z, 0.0, 200);
      if (v > 0) {
        start = r;
      } else {
        out.emplace_back(start, r);
        start = -1.0;
      }
    }
    prevz = z;
    prevu = v;
  }
  if (start >= 0.0) out.emplace_back(start, end);
  return out;
}

Psi2Integrals integrals_on(const BaseDensity& f0, FisherConvention conv,
                           const std::function<double(double)>& g,
                           const std::vector<std::pair<double, double>>& iv) {
  Psi2Integrals r;
  for (auto [a, b] : iv) {
    r.C0 += quad([&](double z) { return z * g(z) * f0.pdf(z); }, a, b, f0.kinks);
    r.C1 += quad([&](double z) { return g(z) * W1(f0, conv, z); }, a, b, f0.kinks);
    r.C2 += quad([&](double z) { return g(z) * W2(f0, conv, z); }, a, b, f0.kinks);
    r.J += quad([&](double z) { const double v = g(z); return v * v * f0.pdf(z); }, a, b, f0.kinks);
    r.G += quad(g, a, b, f0.kinks);
  }
  return r;
}

std::function<double(double)> make_g(const BaseDensity& f0, FisherConvention conv, double nu,
                                     double th1, double th2) {
  return [&f0, conv, nu, th1, th2](double z) {
    const double f = f0.pdf(z);
    if (!(f > 0) || z < 0) return 0.0;
    const double v = nu * z - (th1 * W1(f0, conv, z) + th2 * W2(f0, conv, z)) / f;
    return v > 0 ? v : 0.0;
  };
}

// Laplace, stated convention: closed-form int (rho z - F0/f0) z f0 and
// int (rho z - F0/f0) F0 over [a2, b].
double lap_I1(double rho, double a2, double b) {
  auto P = [rho](double z) {
    return 0.5 * (-rho * std::exp(-z) * (z * z + 2 * z + 2) - z * z - std::exp(-z) * (z + 1));
  };
  return P(b) - P(a2);
}

double lap_I2(double rho, double a2, double b) {
  auto P = [rho](double z) {
    return rho * z * z / 2 + rho / 2 * std::exp(-z) * (z + 1) - 2 * std::exp(z) + 2 * z +
           std::exp(-z) / 2;
  };
  return P(b) - P(a2);
}

struct RhoSolution {
  double rho = 0, nu = 0, th1 = 0;
  Support sup;
};

// vartheta2 = 0: g = th1 [rho z - W1/f0]^+, solve int g W1 / int z g f0 = 2 xi2
RhoSolution solve_rho(const BaseDensity& f0, FisherConvention conv, double xi2) {
  const RShape shape = r_shape(f0, conv);
  if (!(2.0 * xi2 > shape.rmin))
    fail(ErrorKind::Infeasible,
         fmt::format("xi2 = {} is at or below the floor {}", xi2, shape.rmin / 2.0));
  const bool closed = f0.kind == DensityKind::Laplace && conv == FisherConvention::Stated;
  auto I12 = [&](double rho, Support& sup) {
    sup = support_for_rho(f0, conv, shape, rho);
    if (closed) return std::pair{lap_I1(rho, sup.a2, sup.b), lap_I2(rho, sup.a2, sup.b)};
    auto base = [&](double z) {
      const double f = f0.pdf(z);
      return f > 0 ? rho * z - W1(f0, conv, z) / f : 0.0;
    };
    const double i1 = quad([&](double z) { return std::max(0.0, base(z)) * z * f0.pdf(z); },
                           sup.a2, sup.b, f0.kinks);
    const double i2 = quad([&](double z) { return std::max(0.0, base(z)) * W1(f0, conv, z); },
                           sup.a2, sup.b, f0.kinks);
    return std::pair{i1, i2};
  };
  auto F = [&](double rho) {
    Support s;
    auto [i1, i2] = I12(rho, s);
    return i2 - 2.0 * xi2 * i1;
  };
  double lo = shape.rmin * (1.0 + 1e-6);
  if (!(F(lo) < 0.0)) {
    lo = shape.rmin * (1.0 + 1e-10);
    if (!(F(lo) < 0.0)) fail(ErrorKind::Infeasible, "xi2 too close to its floor");
  }
  double hi = 2.0 * xi2 + 1.0;
  if (hi <= lo) hi = lo * 2.0;
  int guard = 0;
  while (F(hi) < 0.0) {
    hi = lo + 2.0 * (hi - lo);
    if (++guard > 80) fail(ErrorKind::BracketError, "rho not bracketed");
  }
  RhoSolution r;
  r.rho = find_root(F, lo, hi, 0.0, 300);
  auto [i1, i2] = I12(r.rho, r.sup);
  (void)i2;
  r.th1 = 1.0 / i1;
  r.nu = r.rho * r.th1;
  return r;
}

struct ActiveSolution {
  double nu = 0, th1 = 0, th2 = 0;
  std::vector<std::pair<double, double>> iv;
  Psi2Integrals I;
  bool ok = false;
};

// Newton on the equality system for the active multipliers (vartheta2 on).
ActiveSolution solve_active(const BaseDensity& f0, FisherConvention conv, double xi2, double xi,
                            bool th1_active, double nu0, double th10, double th20) {
  const double end = scan_end(f0);
  std::vector<double> m{nu0, th1_active ? th10 : 0.0, th20};
  auto eval = [&](const std::vector<double>& v, ActiveSolution& out) {
    out.nu = v[0];
    out.th1 = v[1];
    out.th2 = v[2];
    auto gfun = make_g(f0, conv, v[0], v[1], v[2]);
    auto u = [&](double z) {
      return v[0] * z * f0.pdf(z) - v[1] * W1(f0, conv, z) - v[2] * W2(f0, conv, z);
    };
    out.iv = positive_set(u, end);
    out.I = integrals_on(f0, conv, gfun, out.iv);
    std::vector<double> F{out.I.C0 - 1.0, out.I.C2 - 2.0 * xi};
    if (th1_active) F.push_back(out.I.C1 - 2.0 * xi2);
    return F;
  };
  auto norm = [](const std::vector<double>& F) {
    double s = 0;
    for (double v : F) s = std::max(s, std::abs(v));
    return s;
  };
  ActiveSolution cur;
  auto F = eval(m, cur);
  for (int it = 0; it < 40 && norm(F) > 1e-13; ++it) {
    // Jacobian of (C0, C2[, C1]) w.r.t. (nu, th2[, th1]) over the support
    const int n = th1_active ? 3 : 2;
    Mat J = Mat::Zero(n, n);
    auto dg = [&](int c, double z) {
      const double f = f0.pdf(z);
      if (c == 0) return z;
      if (c == 1) return -W2(f0, conv, z) / f;
      return -W1(f0, conv, z) / f;
    };
    auto phi = [&](int r, double z) {
      if (r == 0) return z * f0.pdf(z);
      if (r == 1) return W2(f0, conv, z);
      return W1(f0, conv, z);
    };
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c)
        for (auto [a, b] : cur.iv)
          J(r, c) += quad([&](double z) { return phi(r, z) * dg(c, z); }, a, b, f0.kinks);
    Vec rhs(n);
    for (int i = 0; i < n; ++i) rhs(i) = -F[i];
    Vec step = J.colPivHouseholderQr().solve(rhs);
    double s = 1.0;
    bool moved = false;
    for (int h = 0; h < 12; ++h, s *= 0.5) {
      std::vector<double> trial = m;
      trial[0] += s * step(0);
      trial[2] += s * step(1);
      if (th1_active) trial[1] += s * step(2);
      ActiveSolution cand;
      std::vector<double> Ft;
      try {
        Ft = eval(trial, cand);
      } catch (const AifError&) {
        continue;
      }
      if (cand.iv.empty()) continue;
      if (norm(Ft) < norm(F)) {
        m = trial;
        F = Ft;
        cur = cand;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  cur.ok = norm(F) <= 1e-10;
  return cur;
}

}  // namespace

double xi2_floor(const BaseDensity& f0, FisherConvention conv) {
  return r_shape(f0, conv).rmin / 2.0;
}

LaplacePsi2 solve_laplace_psi2_system(double xi2, double xi) {
  if (!(xi2 > 0) || !(xi >= xi2))
    fail(ErrorKind::ConfigError, "need 0 < xi2 <= xi");
  static const BaseDensity lap = laplace_density();
  const RhoSolution s = solve_rho(lap, FisherConvention::Stated, xi2);
  LaplacePsi2 r;
  r.nu = s.nu;
  r.vartheta1 = s.th1;
  r.a2 = s.sup.a2;
  r.b = s.sup.b;
  r.rho = s.rho;
  const double nu = r.nu, th = r.vartheta1;
  auto body = [nu, th](double z) { return nu * z - th * (2.0 * std::exp(z) - 1.0); };
  r.residual_norm =
      std::abs(quad([&](double z) { return body(z) * z * std::exp(-z); }, r.a2, r.b) - 2.0);
  r.residual_if =
      std::abs(quad([&](double z) { return body(z) * (2.0 - std::exp(-z)); }, r.a2, r.b) -
               4.0 * xi2);
  if (r.residual_norm > 1e-7 || r.residual_if > 1e-7)
    fail(ErrorKind::SystemInconsistent,
         fmt::format("closed-form solution misses the integral conditions ({}, {})",
                     r.residual_norm, r.residual_if));
  return r;
}

// ---------- assembling designs ----------

namespace {

std::vector<double> design_grid(const BaseDensity& f0, const std::vector<double>& breaks) {
  const double top = std::isfinite(f0.support_end) ? f0.support_end : f0.upper_quantile(1e-10);
  std::vector<double> z{0.0};
  const int half = 1024;
  for (int i = 1; i <= half; ++i) z.push_back(top * i / half);
  // geometric near 0 and toward the tail
  for (int i = 0; i < half / 2; ++i) {
    z.push_back(top * 1e-6 * std::pow(1e6, static_cast<double>(i) / (half / 2)));
    z.push_back(top - top * 0.5 * std::pow(1e-4, static_cast<double>(i) / (half / 2)));
  }
  for (double b : breaks)
    if (b > 0 && b < top) z.push_back(b);
  std::sort(z.begin(), z.end());
  std::vector<double> out;
  for (double v : z)
    if (out.empty() || v - out.back() > 1e-12 * top) out.push_back(v);
  return out;
}

void finish_design(PsiDesign& d, const BaseDensity& f0) {
  // gauge quantities and sensitivities
  std::vector<double> breaks = d.g_breaks;
  if (std::isfinite(d.a1)) breaks.push_back(d.a1);
  d.aif = std::sqrt(d.int_h2_f / (2.0 * d.int_h_f * d.int_h_f) +
                    d.int_g2_f / (2.0 * d.int_zg_f * d.int_zg_f));
  const double B1 = 2.0 * d.int_h_f, B2 = 2.0 * d.int_zg_f;
  if (!std::isfinite(d.int_h) || !std::isfinite(d.int_gW1)) {
    d.gamma_u = kInf;
  } else {
    const double at0 = std::abs(d.psi2_at_zero) / B2;
    d.gamma_u = std::max(at0, std::hypot(d.int_h / B1, d.int_gW1 / B2));
  }

  // KKT residuals
  DesignKkt& k = d.kkt;
  k.norm1 = std::abs(d.int_h_f - 1.0);
  k.norm2 = std::abs(d.int_zg_f - 1.0);
  if (d.constrained) {
    k.slack1 = std::abs(d.theta1 * (d.int_h - 2.0 * d.xi1));
    k.slack2 = std::abs(d.vartheta1 * (d.int_gW1 - 2.0 * d.xi2));
    k.slack3 = std::abs(d.vartheta2 * (d.int_gW2 - 2.0 * d.xi));
    k.primal = std::max({0.0, d.int_h - 2.0 * d.xi1, d.int_gW1 - 2.0 * d.xi2,
                         d.int_gW2 - 2.0 * d.xi}) / std::max(1.0, d.xi);
  }
  k.dual = std::max({0.0, -d.theta1, -d.vartheta1, -d.vartheta2});

  // tabulation
  d.grid_z = design_grid(f0, breaks);
  const std::size_t n = d.grid_z.size();
  d.grid_psi1.assign(n, 0.0);
  d.grid_dpsi1.assign(n, 0.0);
  d.grid_psi2.assign(n, 0.0);
  d.grid_dpsi2.assign(n, 0.0);
  d.grid_psi2[0] = d.psi2_at_zero;
  double clamp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = d.grid_z[i];
    d.grid_dpsi1[i] = d.h(z);
    d.grid_dpsi2[i] = d.g(z);
    if (i > 0) {
      const double a = d.grid_z[i - 1];
      d.grid_psi1[i] = d.grid_psi1[i - 1] + quad(d.h, a, z);
      d.grid_psi2[i] = d.grid_psi2[i - 1] + quad(d.g, a, z);
    }
    // clamp form check: psi' equals the positive part of its affine form
    const double f = f0.pdf(z);
    if (f > 0 && d.constrained) {
      const double aff1 = d.nu1 - d.theta1 / f;
      const double aff2 = d.nu2 * z - (d.vartheta1 * W1(f0, d.convention, z) +
                                       d.vartheta2 * W2(f0, d.convention, z)) / f;
      clamp = std::max(clamp, std::abs(d.grid_dpsi1[i] - std::max(0.0, aff1)));
      clamp = std::max(clamp, std::abs(d.grid_dpsi2[i] - std::max(0.0, aff2)));
      if (d.grid_dpsi1[i] < 0 || d.grid_dpsi2[i] < 0) clamp = std::max(clamp, 1.0);
    }
  }
  k.clamp = clamp;
}

}  // namespace

PsiDesign design_unconstrained(const BaseDensity& f0, FisherConvention conv) {
  PsiDesign d;
  d.density = f0.name;
  d.convention = conv;
  d.constrained = false;
  const double m2 = half_expect(f0, [](double z) { return z * z; });
  if (!std::isfinite(m2) || !(m2 > 0))
    fail(ErrorKind::IntegralDiverged, "second moment of f0 is not finite");
  d.nu1 = 2.0;
  d.theta1 = 0.0;
  d.a1 = kInf;
  d.nu2 = 1.0 / m2;
  d.h = [](double) { return 2.0; };
  d.g = [m2](double z) { return z >= 0 ? z / m2 : 0.0; };
  d.b = kInf;
  d.int_h_f = half_expect(f0, d.h);
  d.int_h = kInf;
  d.int_h2_f = half_expect(f0, [](double) { return 4.0; });
  d.int_zg_f = half_expect(f0, [m2](double z) { return z * z / m2; });
  d.int_g = kInf;
  d.int_gW1 = kInf;
  d.int_gW2 = quad([&](double z) { return d.g(z) * W2(f0, conv, z); }, 0.0,
                   std::isfinite(f0.support_end) ? f0.support_end : kInf, f0.kinks);
  d.int_g2_f = half_expect(f0, [m2](double z) { return z * z / (m2 * m2); });
  d.psi2_at_zero = -d.int_gW2;
  finish_design(d, f0);
  return d;
}

PsiDesign design_constrained(const BaseDensity& f0, double xi, double xi1,
                             FisherConvention conv) {
  if (!(xi > 0) || !(xi1 > 0)) fail(ErrorKind::ConfigError, "xi and xi1 must be positive");
  if (!(xi1 < xi))
    fail(ErrorKind::Infeasible, fmt::format("xi1 = {} leaves no room for xi2 under xi = {}", xi1, xi));
  PsiDesign d;
  d.density = f0.name;
  d.convention = conv;
  d.constrained = true;
  d.xi = xi;
  d.xi1 = xi1;
  d.xi2 = std::sqrt(xi * xi - xi1 * xi1);

  const Psi1Solution p1 = solve_psi1(f0, xi1);
  d.nu1 = p1.nu;
  d.theta1 = p1.theta;
  d.a1 = p1.a;
  {
    const double nu = p1.nu, th = p1.theta, a = p1.a;
    auto fp = std::make_shared<const BaseDensity>(f0);
    d.h = [nu, th, a, fp](double z) {
      if (z < 0 || z >= a) return 0.0;
      const double v = nu - th / fp->pdf(z);
      return v > 0 ? v : 0.0;
    };
  }
  d.int_h_f = quad([&](double z) { return d.h(z) * f0.pdf(z); }, 0.0, d.a1, f0.kinks);
  d.int_h = quad(d.h, 0.0, d.a1, f0.kinks);
  d.int_h2_f = quad([&](double z) { const double v = d.h(z); return v * v * f0.pdf(z); }, 0.0,
                    d.a1, f0.kinks);

  // psi2 with vartheta2 = 0 first
  const RhoSolution rs = solve_rho(f0, conv, d.xi2);
  d.nu2 = rs.nu;
  d.vartheta1 = rs.th1;
  d.vartheta2 = 0.0;
  d.a2 = rs.sup.a2;
  d.b = rs.sup.b;
  std::vector<std::pair<double, double>> iv{{d.a2, d.b}};
  d.g = make_g(f0, conv, d.nu2, d.vartheta1, 0.0);
  Psi2Integrals I = integrals_on(f0, conv, d.g, iv);

  if (I.C2 > 2.0 * xi * (1 + 1e-12)) {
    if (conv == FisherConvention::Stated)
      fail(ErrorKind::SystemInconsistent,
           "psi2(0) bound violated with vartheta2 = 0 although 1 - F0 <= F0 on z >= 0");
    // activate vartheta2; try both active sets and keep the feasible optimum
    ActiveSolution best;
    double bestJ = kInf;
    for (bool th1_on : {true, false}) {
      ActiveSolution s = solve_active(f0, conv, d.xi2, xi, th1_on, rs.nu, rs.th1, 1e-3 * rs.th1);
      if (!s.ok || s.th2 < 0 || s.th1 < 0) continue;
      if (!th1_on && s.I.C1 > 2.0 * d.xi2 * (1 + 1e-10)) continue;
      if (s.I.J < bestJ) {
        bestJ = s.I.J;
        best = s;
      }
    }
    if (!std::isfinite(bestJ))
      fail(ErrorKind::Infeasible,
           fmt::format("no psi2 meets both IF bounds at xi = {}, xi2 = {}", xi, d.xi2));
    d.nu2 = best.nu;
    d.vartheta1 = best.th1;
    d.vartheta2 = best.th2;
    iv = best.iv;
    d.a2 = iv.front().first;
    d.b = iv.back().second;
    d.g = make_g(f0, conv, d.nu2, d.vartheta1, d.vartheta2);
    I = best.I;
  }
  d.g_breaks.clear();
  for (auto [a, b] : iv) {
    d.g_breaks.push_back(a);
    d.g_breaks.push_back(b);
  }
  {
    auto fp = std::make_shared<const BaseDensity>(f0);
    const double nu = d.nu2, t1 = d.vartheta1, t2 = d.vartheta2;
    const auto ivc = iv;
    d.g = [fp, conv, nu, t1, t2, ivc](double z) {
      bool in = false;
      for (auto [a, b] : ivc)
        if (z >= a && z <= b) in = true;
      if (!in) return 0.0;
      const double f = fp->pdf(z);
      if (!(f > 0)) return 0.0;
      const double v = nu * z - (t1 * W1(*fp, conv, z) + t2 * W2(*fp, conv, z)) / f;
      return v > 0 ? v : 0.0;
    };
  }
  d.int_zg_f = I.C0;
  d.int_gW1 = I.C1;
  d.int_gW2 = I.C2;
  d.int_g2_f = I.J;
  d.int_g = I.G;
  d.psi2_at_zero = -I.C2;
  finish_design(d, f0);
  return d;
}

IfProfile evaluate_if_profile(const PsiDesign& d, const BaseDensity& f0) {
  (void)f0;
  IfProfile p;
  p.B1 = 2.0 * d.int_h_f;
  p.B2 = 2.0 * d.int_zg_f;
  p.gamma_u = d.gamma_u;
  return p;
}

TradeoffPoint best_split(const BaseDensity& f0, double xi, int split_resolution,
                         FisherConvention conv) {
  TradeoffPoint tp;
  tp.xi = xi;
  const double f1 = xi1_floor(f0);
  const double f2 = xi2_floor(f0, conv);
  const double lo = f1 * (1 + 1e-6) + 1e-9;
  const double hi2 = xi * xi - f2 * f2;
  if (hi2 <= 0) return tp;
  const double hi = std::sqrt(hi2) * (1 - 1e-7);
  if (!(lo < hi)) return tp;
  auto obj = [&](double x1) {
    try {
      return design_constrained(f0, xi, x1, conv).aif;
    } catch (const AifError&) {
      return kInf;
    }
  };
  const int n = std::max(4, split_resolution);
  double best_x = lo, best_v = kInf;
  std::vector<double> xs(n + 1), vs(n + 1);
  for (int i = 0; i <= n; ++i) {
    xs[i] = lo + (hi - lo) * i / n;
    vs[i] = obj(xs[i]);
    if (vs[i] < best_v) {
      best_v = vs[i];
      best_x = xs[i];
    }
  }
  if (!std::isfinite(best_v)) return tp;
  const auto it = std::find(xs.begin(), xs.end(), best_x);
  const int i = static_cast<int>(it - xs.begin());
  const double a = xs[std::max(0, i - 1)], b = xs[std::min(n, i + 1)];
  auto g = golden_section_min(obj, a, b, 1e-4 * xi);
  if (g.fx < best_v) {
    best_v = g.fx;
    best_x = g.x;
  }
  const PsiDesign d = design_constrained(f0, xi, best_x, conv);
  tp.xi1 = best_x;
  tp.xi2 = d.xi2;
  tp.aif = d.aif;
  tp.gamma_u = d.gamma_u;
  tp.feasible = true;
  return tp;
}

std::vector<TradeoffPoint> tradeoff_frontier(const BaseDensity& f0,
                                             const std::vector<double>& xi_grid,
                                             int split_resolution, FisherConvention conv) {
  std::vector<TradeoffPoint> out(xi_grid.size());
  parallel_for(static_cast<int>(xi_grid.size()), [&](int i) {
    out[i] = best_split(f0, xi_grid[i], split_resolution, conv);
  });
  return out;
}

LocationScaleSpec design_to_estimator(const PsiDesign& d, double scale) {
  if (!(scale > 0)) fail(ErrorKind::ConfigError, "scale must be positive");
  std::vector<double> p1 = d.grid_psi1, s1 = d.grid_dpsi1, p2 = d.grid_psi2, s2 = d.grid_dpsi2;
  for (auto* v : {&p1, &s1, &p2, &s2})
    for (double& e : *v) e *= scale;
  MonotoneCubic t1(d.grid_z, p1, s1), t2(d.grid_z, p2, s2);
  const double zK = d.grid_z.back();
  const double v1 = p1.back(), v2 = p2.back();
  auto h = d.h;
  auto g = d.g;
  t1.set_tail([h, zK, v1, scale](double z) { return v1 + scale * quad(h, zK, z); },
              [h, scale](double z) { return scale * h(z); });
  t2.set_tail([g, zK, v2, scale](double z) { return v2 + scale * quad(g, zK, z); },
              [g, scale](double z) { return scale * g(z); });
  LocationScaleSpec s = spec_from_tables("designed", t1, t2);
  s.psi1_limit = std::isfinite(d.int_h) ? scale * d.int_h : kInf;
  s.psi2_limit = std::isfinite(d.int_gW1) ? scale * d.int_gW1 : kInf;
  return s;
}

double fisher_residual(const PsiDesign& d, const BaseDensity& f0) {
  // E psi2(Z) = psi2(0) + 2 int_0^inf psi2'(z) (1 - F0(z)) dz
  std::vector<double> bp = d.g_breaks;
  const double tail = quad([&](double z) { return d.g(z) * f0.sf(z); }, 0.0,
                           std::isfinite(f0.support_end) ? f0.support_end : kInf, bp);
  return d.psi2_at_zero + 2.0 * tail;
}

}  // namespace aiflab
