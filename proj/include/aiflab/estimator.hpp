#pragma once

#include <functional>
#include <optional>
#include <random>
#include <string>

#include "aiflab/types.hpp"

namespace aiflab {

enum class InitRule { Zero, LocationScale, Regression };

// Per-point score psi(x, theta) : R^m x R^q -> R^q with analytic Jacobians.
struct MEstimatorSpec {
  std::function<Vec(const Eigen::Ref<const Vec>& x, const Vec& theta)> psi;
  std::function<Mat(const Eigen::Ref<const Vec>& x, const Vec& theta)> psi_jac_theta;  // q x q
  std::function<Mat(const Eigen::Ref<const Vec>& x, const Vec& theta)> psi_jac_x;      // q x m
  int m = 1;
  int q = 1;
  std::string name;
  InitRule init = InitRule::Zero;
  // iterate must stay inside the parameter domain (e.g. positive scale)
  std::function<bool(const Vec& theta)> admissible;
};

// Whole-sample estimating equations G(X, theta) = 0. Needed when a point's
// score depends on the rest of the sample (leverage-weighted regression).
struct EstimatingSystem {
  int m = 1;
  int q = 1;
  std::string name;
  std::function<Vec(const DataMatrix&, const Vec&)> G;
  std::function<Mat(const DataMatrix&, const Vec&)> G_theta;  // q x q
  std::function<Mat(const DataMatrix&, const Vec&)> G_x;      // q x mN, flat index n*m + i
  std::function<Vec(const DataMatrix&)> initial;
  std::function<bool(const Vec&)> admissible;
};

EstimatingSystem as_system(const MEstimatorSpec& spec);

struct SolveConfig {
  int max_iter = 100;
  double tol = 1e-10;  // on ||G||_inf / N
  std::optional<Vec> initial_theta;  // empty means "auto"
  double damping = 1.0;
};

struct SolveResult {
  Vec theta;
  double residual = 0.0;  // ||G||_inf / N
  int iterations = 0;
};

Vec evaluate_G(const MEstimatorSpec& spec, const DataMatrix& data, const Vec& theta);
Vec evaluate_G(const EstimatingSystem& sys, const DataMatrix& data, const Vec& theta);

SolveResult solve_ex(const EstimatingSystem& sys, const DataMatrix& data,
                     const SolveConfig& cfg = {});
Vec solve(const EstimatingSystem& sys, const DataMatrix& data, const SolveConfig& cfg = {});
Vec solve(const MEstimatorSpec& spec, const DataMatrix& data, const SolveConfig& cfg = {});

// Monte Carlo mean of psi(X, theta0) with X drawn by the sampler.
using PointSampler = std::function<Vec(std::mt19937_64&)>;
Vec check_fisher_consistency(const MEstimatorSpec& spec, const PointSampler& sampler,
                             const Vec& theta0, int n_mc, std::uint64_t seed = 1);

// Starting points used by "auto" initialization.
Vec location_scale_start(const DataMatrix& data);
Vec ols_start(const DataMatrix& data);  // rows 0..q-1 covariates, last row response

}  // namespace aiflab
