#pragma once

#include <string>
#include <vector>

#include "aiflab/aif.hpp"
#include "aiflab/estimator.hpp"
#include "aiflab/types.hpp"

namespace aiflab {

struct RegressionData {
  Mat x;  // q x N covariates
  Vec y;  // N responses

  int q() const { return static_cast<int>(x.rows()); }
  int N() const { return static_cast<int>(x.cols()); }
  // (q+1) x N with y as the last row
  DataMatrix stacked() const;
  static RegressionData from_stacked(const DataMatrix& d);
};

enum class SchemeKind { OLS, Huber, Mallows, Schweppe };

struct RegressionScheme {
  SchemeKind kind = SchemeKind::OLS;
  double K = kDefaultK;  // clip level of eta; +inf disables clipping
  static constexpr double kDefaultK = 1.345;
};

SchemeKind parse_scheme(const std::string& name);
std::string scheme_name(SchemeKind k);

// eta(u) = clamp(u, -K, K); eta'(u) = 1 on |u| <= K (interior value at the kink).
double huber_eta(double u, double K);
double huber_eta_prime(double u, double K);

Vec leverages(const RegressionData& data);

// d h_nn / d x_{k,j} (point j, coordinate k) for all n, from the leave-one-out inverse of X X^T.
Vec leverage_partials(const RegressionData& data, int j, int k);

// Weight pair (w_n, v_n) per point for the scheme.
void scheme_weights(const RegressionData& data, const RegressionScheme& scheme, Vec& w, Vec& v);

// c_j = w_j eta'(r_j v_j) v_j
Vec scheme_c(const RegressionData& data, const RegressionScheme& scheme, const Vec& theta);

// G(X~, theta) = sum_n eta(r_n v_n) w_n x_n, with analytic derivatives,
// including the leverage terms of the weights.
EstimatingSystem regression_system(const RegressionScheme& scheme, int q);

// Per-point form psi = eta(y - x^T theta) x; only for OLS and Huber, whose
// weights do not depend on the rest of the sample.
MEstimatorSpec regression_point_spec(const RegressionScheme& scheme, int q);

AifReport regression_aif(const RegressionData& data, const RegressionScheme& scheme, double p);

struct SweepRow {
  std::string scheme;
  double K = 0.0;
  double mean_aif = 0.0;
  double stderr_aif = 0.0;
  int n_ok = 0;
  int n_fail = 0;
};

// Mean AIF over the given datasets for each (scheme, K). OLS gets one row
// per K with identical values.
std::vector<SweepRow> aif_vs_K_sweep(const std::vector<RegressionData>& datasets,
                                     const std::vector<SchemeKind>& schemes,
                                     const std::vector<double>& K_grid, double p);

}  // namespace aiflab
