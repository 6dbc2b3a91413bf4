#pragma once

#include <functional>
#include <string>
#include <vector>

#include "aiflab/density.hpp"
#include "aiflab/location_scale.hpp"
#include "aiflab/numerics.hpp"

namespace aiflab {

// How psi2(0) is tied to psi2' (the scale score must integrate to zero):
//   Stated: psi2(0) = -int_0^inf psi2'(z) (1 - F0(z)) dz
//   Exact:  psi2(0) = -2 int_0^inf psi2'(z) (1 - F0(z)) dz, which makes
//           E psi2(Z) = 0 hold exactly
// The IF constraints then weigh psi2' by W1 (for psi2(inf)) and W2 (for
// psi2(0)): Stated W1 = F0, W2 = 1 - F0; Exact W1 = 2F0 - 1, W2 = 2(1 - F0).
enum class FisherConvention { Stated, Exact };

FisherConvention parse_convention(const std::string& s);
std::string convention_name(FisherConvention c);

struct DesignKkt {
  double norm1 = 0;     // |int_0^inf h f0 - 1|
  double norm2 = 0;     // |int_0^inf z g f0 - 1|
  double slack1 = 0;    // |theta1 (int h - 2 xi1)|
  double slack2 = 0;    // |vartheta1 (int g W1 - 2 xi2)|
  double slack3 = 0;    // |vartheta2 (int g W2 - 2 xi)|
  double primal = 0;    // constraint violation max(0, int h - 2xi1, ...)
  double dual = 0;      // max(0, -multiplier)
  double clamp = 0;     // max |psi' - [affine form]^+| on a check grid
  double max() const;
};

struct PsiDesign {
  std::string density;
  FisherConvention convention = FisherConvention::Stated;
  bool constrained = false;
  double xi = kInf, xi1 = kInf, xi2 = kInf;

  // psi1' = h(z) = [nu1 - theta1 / f0(z)]^+ on z >= 0
  double nu1 = 0, theta1 = 0;
  double a1 = kInf;  // h vanishes beyond a1
  // psi2' = g(z) = [nu2 z - (vartheta1 W1(z) + vartheta2 W2(z)) / f0(z)]^+
  double nu2 = 0, vartheta1 = 0, vartheta2 = 0;
  double a2 = 0, b = kInf;  // support of g (outermost points)
  std::vector<double> g_breaks;  // all support edges of g
  double psi2_at_zero = 0;

  std::function<double(double)> h, g;  // analytic psi1', psi2' on z >= 0

  double int_h_f = 0, int_h = 0, int_h2_f = 0;
  double int_zg_f = 0, int_g = 0, int_gW1 = 0, int_gW2 = 0, int_g2_f = 0;
  double aif = 0;
  double gamma_u = kInf;
  DesignKkt kkt;

  // tabulation on z >= 0
  std::vector<double> grid_z, grid_psi1, grid_dpsi1, grid_psi2, grid_dpsi2;
};

struct Psi1Solution {
  double nu = 0, theta = 0, a = 0;
};

// Smallest attainable location sensitivity: xi1 must exceed 1 / (2 f0(0)).
double xi1_floor(const BaseDensity& f0);
// Smallest attainable psi2(inf) sensitivity with vartheta2 = 0.
double xi2_floor(const BaseDensity& f0, FisherConvention conv);

// Laplace: root of e^a (xi1 + 1 - a) = 1 + (a + 1) xi1 on (0, xi1 + 1).
double laplace_a1(double xi1);
double laplace_a1_residual(double a, double xi1);  // |e^a - (1+(a+1)xi1)/(xi1+1-a)| / e^a
Psi1Solution solve_psi1(const BaseDensity& f0, double xi1);

struct LaplacePsi2 {
  double nu = 0, vartheta1 = 0, a2 = 0, b = 0, rho = 0;
  double residual_norm = 0;  // |int (nu z - vartheta1 (2e^z - 1)) z e^{-z} - 2|
  double residual_if = 0;    // |int (...)(2 - e^{-z}) - 4 xi2|
};
// Stated convention, vartheta2 = 0, closed-form antiderivatives; verified
// against the original integral conditions by independent quadrature.
LaplacePsi2 solve_laplace_psi2_system(double xi2, double xi);

PsiDesign design_unconstrained(const BaseDensity& f0,
                               FisherConvention conv = FisherConvention::Stated);
PsiDesign design_constrained(const BaseDensity& f0, double xi, double xi1,
                             FisherConvention conv = FisherConvention::Stated);

IfProfile evaluate_if_profile(const PsiDesign& d, const BaseDensity& f0);

struct TradeoffPoint {
  double xi = 0, xi1 = 0, xi2 = 0, aif = kInf, gamma_u = kInf;
  bool feasible = false;
};

// For each xi, minimizes the population AIF over the split xi1^2 + xi2^2 = xi^2:
// coarse scan with split_resolution points, then golden section to 1e-4 xi.
std::vector<TradeoffPoint> tradeoff_frontier(const BaseDensity& f0,
                                             const std::vector<double>& xi_grid,
                                             int split_resolution = 24,
                                             FisherConvention conv = FisherConvention::Stated);
TradeoffPoint best_split(const BaseDensity& f0, double xi, int split_resolution,
                         FisherConvention conv);

// psi1, psi2 rebuilt from the tabulated derivatives (monotone cubic) with the
// analytic form beyond the grid; both scaled by `scale`.
LocationScaleSpec design_to_estimator(const PsiDesign& d, double scale = 1.0);

// E psi2(Z) under f0 for the designed psi2 (zero only under the exact convention).
double fisher_residual(const PsiDesign& d, const BaseDensity& f0);

}  // namespace aiflab
