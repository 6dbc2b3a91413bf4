#pragma once

#include <optional>
#include <string>
#include <vector>

#include "aiflab/estimator.hpp"
#include "aiflab/types.hpp"

namespace aiflab {

struct StackedJacobians {
  Mat g_theta;  // q x q
  Mat g_x;      // q x mN, entry (i, n) of Delta X at column n*m + i
  double condition = 1.0;
};

struct AifReport {
  double aif = 0.0;
  double p = 2.0;
  int m = 1;
  int N = 1;
  Vec sigma_star;
  std::vector<Vec> maximizing_sigmas;  // all sigma within 1e-12 relative of the max
  Vec a_vector;                        // sigma*^T G_theta^{-1} G_x, length mN
  Mat delta_x_unit;                    // m x N, optimal attack at delta = 1
  double budget_delta = 1.0;
  std::vector<int> argmax_ties;        // p = 1: flat indices tied for max |a|
  Vec theta;
  StackedJacobians jac;
  std::vector<std::string> warnings;
};

StackedJacobians assemble_jacobians(const EstimatingSystem& sys, const DataMatrix& data,
                                    const Vec& t_N);
StackedJacobians assemble_jacobians(const MEstimatorSpec& spec, const DataMatrix& data,
                                    const Vec& t_N);

// Maximizes ||sigma^T G_theta^{-1} G_x||_{p*} over sign vectors with sigma(0) = +1.
AifReport aif_from_jacobians(const StackedJacobians& jac, int m, int N, double p);

// Shared finisher: given candidate (sigma, a) pairs, picks the maximizer and
// builds the optimal attack.
AifReport aif_from_rows(const std::vector<Vec>& sigmas, const std::vector<Vec>& rows, int m,
                        int N, double p);

AifReport compute_aif(const EstimatingSystem& sys, const DataMatrix& data, double p,
                      const std::optional<Vec>& t_N = std::nullopt);
AifReport compute_aif(const MEstimatorSpec& spec, const DataMatrix& data, double p,
                      const std::optional<Vec>& t_N = std::nullopt);

Mat synthesize_attack(const AifReport& report, double delta);

struct KktResidual {
  double lambda = 0.0;
  double stationarity = 0.0;  // max_k |a_k + lambda p sign(D_k)|D_k|^{p-1}| / max|a|
  double sign = 0.0;          // count of entries with sign(D) == sign(a) != 0
  double budget = 0.0;        // |(1/mN) sum |D|^p - delta^p| / delta^p
};
KktResidual attack_kkt(const AifReport& report, double delta);

struct FirstOrderRow {
  double delta = 0.0;
  double ratio = 0.0;        // ||t(X + D) - t(X)||_1 / delta
  double discrepancy = 0.0;  // |ratio - aif| / aif
};
std::vector<FirstOrderRow> verify_attack_firstorder(const EstimatingSystem& sys,
                                                    const DataMatrix& data,
                                                    const AifReport& report,
                                                    const std::vector<double>& deltas);

// Random and vertex search over {(1/mN)||D||_p^p <= delta^p} followed by local
// refinement; maximizes ||t(X + D) - t(X)||_1 / delta. Only for mN <= 6.
double brute_force_aif(const EstimatingSystem& sys, const DataMatrix& data, double p,
                       double delta, int grid_size, std::uint64_t seed = 7);

void check_p(double p);
// ||v||_r computed with max-scaling; r = inf allowed.
double scaled_norm(const Vec& v, double r);

}  // namespace aiflab
