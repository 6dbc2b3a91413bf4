#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aiflab/aif.hpp"
#include "aiflab/density.hpp"
#include "aiflab/estimator.hpp"
#include "aiflab/numerics.hpp"
#include "aiflab/tabulated.hpp"

namespace aiflab {

// psi1 odd, psi2 even, both nondecreasing on z >= 0; z = (x - T) / S.
struct LocationScaleSpec {
  std::string name;
  ScalarFn psi1, dpsi1, psi2, dpsi2;
  std::vector<double> kinks;  // |z| where a derivative jumps
  double psi1_limit = kInf;   // psi1(+inf)
  double psi2_limit = kInf;   // psi2(+inf)
};

LocationScaleSpec meanstd_spec();
// psi1 = clamp(z, -K, K), psi2 = min(alpha^2, z^2) - beta
LocationScaleSpec huber2_spec(double K, double alpha, double beta);
// beta = E[min(K^2, Z^2)] under f0, so the estimator is Fisher-consistent
double huber2_beta(const BaseDensity& f0, double K);
LocationScaleSpec huber2_for(const BaseDensity& f0, double K);
// psi1 from the odd extension of t1 and psi2 from the even extension of t2
// (both tables on z >= 0)
LocationScaleSpec spec_from_tables(const std::string& name, MonotoneCubic t1, MonotoneCubic t2);
// CSV with header, columns z, psi1, psi1', psi2, psi2' on z >= 0
LocationScaleSpec spec_from_table_csv(const std::string& path);

MEstimatorSpec to_mestimator(const LocationScaleSpec& spec);

struct AbcdStats {
  double a = 0, b = 0, c = 0, d = 0;
};

AbcdStats abcd_stats(const LocationScaleSpec& spec, const Vec& data, double T, double S);

struct Huber2Fit {
  AbcdStats stats;  // from the set-membership formulas
  double T = 0, S = 0;
  int n_A = 0, n_A_minus = 0, n_A_plus = 0, n_B = 0;
};

// Solves Huber's Proposal 2 and returns a, b, c, d from the clipping sets.
Huber2Fit huber_proposal2_stats(const Vec& data, double K, double alpha, double beta);

// Closed-form finite-sample AIF at a given estimate (T, S).
AifReport ls_aif_at(const LocationScaleSpec& spec, const Vec& data, double T, double S, double p);
// Solves for (T, S) first.
AifReport ls_aif(const LocationScaleSpec& spec, const Vec& data, double p);

// Scale S at which E psi2(Z / S) = 0 under f0 (1 for a Fisher-consistent psi2).
double population_scale(const LocationScaleSpec& spec, const BaseDensity& f0);
// Limit of the finite-sample AIF, with Z standardized by the population scale.
double population_aif(const LocationScaleSpec& spec, const BaseDensity& f0);

struct OddMoments {
  double z_dpsi1 = 0, dpsi2 = 0, dpsi1_dpsi2 = 0;
};
OddMoments population_odd_moments(const LocationScaleSpec& spec, const BaseDensity& f0);

struct IfProfile {
  double B1 = 0, B2 = 0;
  double gamma_u = 0;  // +inf when either psi is unbounded
};
IfProfile ls_if_profile(const LocationScaleSpec& spec, const BaseDensity& f0);

struct McRow {
  int N = 0;
  int replicates = 0;
  double mean_aif = 0;
  double population = 0;
  double mean_abs_err = 0;
  double rel_err = 0;  // mean_abs_err / population
  double stderr_err = 0;
  int n_fail = 0;
};

std::vector<McRow> monte_carlo_population_check(const LocationScaleSpec& spec,
                                                const BaseDensity& f0,
                                                const std::vector<int>& N_grid,
                                                std::uint64_t seed, int replicates = 1);

}  // namespace aiflab
