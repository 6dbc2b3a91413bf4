#include "aiflab/numerics.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <limits>
#include <fmt/format.h>

#include "aiflab/errors.hpp"

namespace aiflab {

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 31>;

struct Panel {
  double value = 0.0;
  double error = 0.0;
  double l1 = 0.0;
};

Panel gk_once(const ScalarFn& f, double a, double b) {
  Panel p;
  p.value = GK::integrate(f, a, b, 0, 0.0, &p.error, &p.l1);
  p.error *= 0.5 * (b - a);  // reported on the reference interval [-1, 1]
  return p;
}

// bisection on single GK31 panels; stops on the requested tolerance or at roundoff level
QuadResult adapt(const ScalarFn& f, double a, double b, const Panel& whole, double abs_tol,
                 double rel_tol, int depth) {
  const double eps = std::numeric_limits<double>::epsilon();
  const double floor = 50.0 * eps * whole.l1;
  if (depth <= 0 || whole.error <= std::max({abs_tol, rel_tol * std::abs(whole.value), floor}))
    return {whole.value, whole.error};
  const double m = 0.5 * (a + b);
  const Panel left = gk_once(f, a, m), right = gk_once(f, m, b);
  const QuadResult l = adapt(f, a, m, left, 0.5 * abs_tol, rel_tol, depth - 1);
  const QuadResult r = adapt(f, m, b, right, 0.5 * abs_tol, rel_tol, depth - 1);
  return {l.value + r.value, l.error + r.error};
}

QuadResult gk_panel(const ScalarFn& f, double a, double b, const QuadOptions& opt) {
  if (a == b) return {};
  if (std::isinf(b)) {
    ScalarFn g = [&](double u) {
      const double t = std::tan(u);
      const double c = std::cos(u);
      const double v = f(a + t);
      if (v == 0.0) return 0.0;
      return v / (c * c);
    };
    return adapt(g, 0.0, M_PI / 2, gk_once(g, 0.0, M_PI / 2), opt.abs_tol, opt.rel_tol,
                 opt.max_depth);
  }
  return adapt(f, a, b, gk_once(f, a, b), opt.abs_tol, opt.rel_tol, opt.max_depth);
}

}  // namespace

QuadResult integrate_ex(const ScalarFn& f, double a, double b,
                        const std::vector<double>& breakpoints,
                        const QuadOptions& opt) {
  if (!(b >= a)) fail(ErrorKind::ConfigError, "integrate: need a <= b");
  std::vector<double> cuts{a};
  for (double c : breakpoints)
    if (c > a && c < b && std::isfinite(c)) cuts.push_back(c);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  cuts.push_back(b);

  QuadResult total;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    QuadResult p = gk_panel(f, cuts[i], cuts[i + 1], opt);
    total.value += p.value;
    total.error += p.error;
  }
  if (!std::isfinite(total.value) || !std::isfinite(total.error) ||
      total.error > std::max(opt.fail_tol, opt.fail_tol * std::abs(total.value)))
    fail(ErrorKind::IntegralDiverged,
         fmt::format("quadrature on [{}, {}] did not settle (value {}, error {})",
                     a, b, total.value, total.error));
  return total;
}

double integrate(const ScalarFn& f, double a, double b,
                 const std::vector<double>& breakpoints, const QuadOptions& opt) {
  return integrate_ex(f, a, b, breakpoints, opt).value;
}

double find_root(const ScalarFn& f, double lo, double hi, double xtol,
                 int max_iter) {
  double flo = f(lo);
  double fhi = f(hi);
  if (!std::isfinite(flo) || !std::isfinite(fhi))
    fail(ErrorKind::BracketError,
         fmt::format("non-finite bracket values f({})={}, f({})={}", lo, flo, hi, fhi));
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo > 0) == (fhi > 0))
    fail(ErrorKind::BracketError,
         fmt::format("root not bracketed: f({})={}, f({})={}", lo, flo, hi, fhi));
  auto tol = [xtol](double x, double y) {
    const double w = std::abs(x - y);
    return w <= std::max(xtol, 4 * std::numeric_limits<double>::epsilon() *
                                   std::max(std::abs(x), std::abs(y)));
  };
  std::uintmax_t iters = static_cast<std::uintmax_t>(max_iter);
  auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, iters);
  if (iters >= static_cast<std::uintmax_t>(max_iter))
    fail(ErrorKind::DidNotConverge, "root finder hit its iteration cap");
  // pick the endpoint with the smaller residual
  const double x1 = r.first, x2 = r.second;
  return std::abs(f(x1)) <= std::abs(f(x2)) ? x1 : x2;
}

double expand_upper(const ScalarFn& f, double lo, double hi, double factor,
                    int max_steps) {
  const double flo = f(lo);
  double width = hi - lo;
  for (int s = 0; s < max_steps; ++s) {
    const double fh = f(lo + width);
    if (std::isfinite(fh) && (fh > 0) != (flo > 0)) return lo + width;
    width *= factor;
  }
  fail(ErrorKind::BracketError,
       fmt::format("no sign change found above {} after {} expansions", lo, max_steps));
}

GoldenResult golden_section_min(const ScalarFn& f, double lo, double hi,
                                double xtol) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  int n = 2;
  while (b - a > xtol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
    ++n;
  }
  GoldenResult r;
  if (fc <= fd) {
    r.x = c;
    r.fx = fc;
  } else {
    r.x = d;
    r.fx = fd;
  }
  r.evaluations = n;
  return r;
}

std::pair<double, double> ls_fit(const std::vector<double>& x,
                                 const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    fail(ErrorKind::DimensionError, "ls_fit needs at least two paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

}  // namespace aiflab
