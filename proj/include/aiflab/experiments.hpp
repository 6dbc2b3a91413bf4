#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aiflab/designer.hpp"
#include "aiflab/io.hpp"
#include "aiflab/regression.hpp"

namespace aiflab {

inline constexpr const char* kVersion = "0.1.0";

struct ExperimentConfig {
  std::string name = "figure2";
  std::uint64_t seed = 20240501;
  int n_replicates = 20;
  int q = 3;
  int N = 100;
  double noise_std = 1.4142135623730951;  // variance 2
  std::string x_dist = "normal";          // covariate entries: normal | uniform (unit variance)
  double p = 2.0;
  std::vector<double> K_grid;
  std::vector<double> xi_grid;
  std::vector<int> N_grid;
  std::string density = "laplace";
  FisherConvention convention = FisherConvention::Stated;
  double huber_K = 1.5;  // convergence study
  int split_resolution = 24;
  std::string output;    // directory; empty = no files

  Json to_json() const;
  std::uint64_t hash() const;
};

// Desk scale (q=3, N=100, 20 replicates) and the full protocol (q=5, N=500, 100).
ExperimentConfig figure2_config(bool full_scale);
ExperimentConfig figure1_config();
ExperimentConfig convergence_config();

struct ResultRow {
  std::string cell;
  std::string metric;
  double value = 0.0;
  int replicate = -1;  // -1 for aggregates
};

struct ResultTable {
  std::string experiment;
  std::vector<ResultRow> rows;
  Json metadata;
  // two-column series written as <dir>/<name>.csv
  std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>> plots;

  void add(std::string cell, std::string metric, double value, int replicate = -1);
  // rows sorted by (cell, replicate), stable in metric order
  std::string to_csv() const;
  double get(const std::string& cell, const std::string& metric, int replicate = -1) const;
};

std::vector<RegressionData> figure2_datasets(const ExperimentConfig& cfg);
ResultTable run_figure2(const ExperimentConfig& cfg);

// Optimal frontier evaluated at the gross-error sensitivities of Huber's
// Proposal 2 over cfg.K_grid, plus the frontier on cfg.xi_grid.
ResultTable run_figure1(const ExperimentConfig& cfg);

ResultTable run_convergence(const ExperimentConfig& cfg);

// Writes <dir>/<experiment>.csv, <dir>/<experiment>_manifest.json and the
// plot series.
void write_results(const ResultTable& t, const std::string& dir);

}  // namespace aiflab
