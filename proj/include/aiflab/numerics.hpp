#pragma once

#include <functional>
#include <limits>
#include <vector>

namespace aiflab {

using ScalarFn = std::function<double(double)>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct QuadOptions {
  double rel_tol = 1e-12;
  double abs_tol = 1e-11;
  unsigned max_depth = 18;
  // error estimate above this (absolute and relative to |I|) means the
  // adaptive refinement did not settle
  double fail_tol = 1e-6;
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
};

// Adaptive Gauss-Kronrod on [a, b]; b may be +inf (handled by z = a + tan u).
// Interior breakpoints inside (a, b) split the range so kinks sit on
// panel edges.
QuadResult integrate_ex(const ScalarFn& f, double a, double b,
                        const std::vector<double>& breakpoints = {},
                        const QuadOptions& opt = {});
double integrate(const ScalarFn& f, double a, double b,
                 const std::vector<double>& breakpoints = {},
                 const QuadOptions& opt = {});

// Bracketed root by TOMS 748. Throws BracketError if f(lo), f(hi) share sign.
double find_root(const ScalarFn& f, double lo, double hi, double xtol = 0.0,
                 int max_iter = 200);

// Grows hi geometrically (hi <- lo + factor*(hi-lo)) until f changes sign.
double expand_upper(const ScalarFn& f, double lo, double hi, double factor = 2.0,
                    int max_steps = 60);

struct GoldenResult {
  double x = 0.0;
  double fx = 0.0;
  int evaluations = 0;
};

GoldenResult golden_section_min(const ScalarFn& f, double lo, double hi,
                                double xtol);

// Ordinary least-squares slope and intercept of y on x.
std::pair<double, double> ls_fit(const std::vector<double>& x,
                                 const std::vector<double>& y);

}  // namespace aiflab
