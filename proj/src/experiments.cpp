#include "aiflab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <map>
#include <sstream>

#include "aiflab/errors.hpp"
#include "aiflab/location_scale.hpp"
#include "aiflab/rng.hpp"

namespace aiflab {

Json ExperimentConfig::to_json() const {
  Json j;
  j["name"] = name;
  j["seed"] = seed;
  j["n_replicates"] = n_replicates;
  j["q"] = q;
  j["N"] = N;
  j["noise_std"] = noise_std;
  j["x_dist"] = x_dist;
  j["p"] = p;
  j["K_grid"] = K_grid;
  j["xi_grid"] = xi_grid;
  j["N_grid"] = N_grid;
  j["density"] = density;
  j["convention"] = convention_name(convention);
  j["huber_K"] = huber_K;
  j["split_resolution"] = split_resolution;
  return j;
}

std::uint64_t ExperimentConfig::hash() const {
  const std::string s = dump_json(to_json(), -1);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ExperimentConfig figure2_config(bool full_scale) {
  ExperimentConfig c;
  c.name = "figure2";
  c.q = full_scale ? 5 : 3;
  c.N = full_scale ? 500 : 100;
  c.n_replicates = full_scale ? 100 : 20;
  for (double K = 3.05; K <= 5.0 + 1e-9; K += 0.15) c.K_grid.push_back(std::round(K * 100) / 100);
  return c;
}

ExperimentConfig figure1_config() {
  ExperimentConfig c;
  c.name = "figure1";
  c.density = "laplace";
  c.convention = FisherConvention::Exact;
  for (int i = 0; i <= 16; ++i) c.K_grid.push_back(1.0 + 0.25 * i);
  for (double xi : {3.0, 3.5, 4.0, 4.5, 5.0, 6.0, 7.0, 8.0, 10.0, 12.0}) c.xi_grid.push_back(xi);
  return c;
}

ExperimentConfig convergence_config() {
  ExperimentConfig c;
  c.name = "convergence";
  c.density = "normal";
  c.huber_K = 1.5;
  c.N_grid = {100, 1000, 10000, 100000};
  c.n_replicates = 40;
  return c;
}

void ResultTable::add(std::string cell, std::string metric, double value, int replicate) {
  rows.push_back({std::move(cell), std::move(metric), value, replicate});
}

std::string ResultTable::to_csv() const {
  std::vector<ResultRow> sorted = rows;
  std::stable_sort(sorted.begin(), sorted.end(), [](const ResultRow& a, const ResultRow& b) {
    if (a.cell != b.cell) return a.cell < b.cell;
    return a.replicate < b.replicate;
  });
  std::ostringstream out;
  out << "experiment,cell,metric,value,replicate\n";
  for (const auto& r : sorted)
    out << experiment << ",\"" << r.cell << "\"," << r.metric << "," << fmt17(r.value) << ","
        << r.replicate << "\n";
  return out.str();
}

double ResultTable::get(const std::string& cell, const std::string& metric, int replicate) const {
  for (const auto& r : rows)
    if (r.cell == cell && r.metric == metric && r.replicate == replicate) return r.value;
  fail(ErrorKind::ConfigError, fmt::format("no result for {} / {}", cell, metric));
}

namespace {

double draw_covariate(const std::string& dist, std::mt19937_64& rng) {
  if (dist == "normal") return std::normal_distribution<double>(0.0, 1.0)(rng);
  if (dist == "uniform") {
    const double r = std::sqrt(3.0);
    return std::uniform_real_distribution<double>(-r, r)(rng);
  }
  fail(ErrorKind::ConfigError, fmt::format("unknown covariate distribution '{}'", dist));
}

std::string k_cell(const std::string& scheme, double K) {
  return fmt::format("{}/K={:.4f}", scheme, K);
}

}  // namespace

std::vector<RegressionData> figure2_datasets(const ExperimentConfig& cfg) {
  if (cfg.q < 1 || cfg.N <= cfg.q || cfg.n_replicates < 1)
    fail(ErrorKind::ConfigError, "figure2 needs q >= 1, N > q and at least one replicate");
  // theta is drawn once and kept fixed across replicates
  auto trng = make_stream(cfg.seed, {0x7e7a});
  Vec theta(cfg.q);
  for (int i = 0; i < cfg.q; ++i) theta(i) = std::normal_distribution<double>(0.0, 1.0)(trng);
  std::vector<RegressionData> out;
  for (int r = 0; r < cfg.n_replicates; ++r) {
    auto rng = make_stream(cfg.seed, {0xda7a, static_cast<std::uint64_t>(r)});
    RegressionData d;
    d.x = Mat(cfg.q, cfg.N);
    d.y = Vec(cfg.N);
    for (int n = 0; n < cfg.N; ++n) {
      for (int i = 0; i < cfg.q; ++i) d.x(i, n) = draw_covariate(cfg.x_dist, rng);
      d.y(n) = d.x.col(n).dot(theta) + cfg.noise_std * std::normal_distribution<double>(0.0, 1.0)(rng);
    }
    out.push_back(std::move(d));
  }
  return out;
}

ResultTable run_figure2(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto data = figure2_datasets(cfg);
  ResultTable t;
  t.experiment = "figure2";
  const auto rows = aif_vs_K_sweep(
      data, {SchemeKind::OLS, SchemeKind::Huber, SchemeKind::Mallows, SchemeKind::Schweppe},
      cfg.K_grid, cfg.p);
  for (const auto& r : rows) {
    const std::string cell = k_cell(r.scheme, r.K);
    t.add(cell, "mean_aif", r.mean_aif);
    t.add(cell, "stderr", r.stderr_aif);
    t.add(cell, "n_fail", r.n_fail);
  }
  std::map<std::string, std::vector<std::pair<double, double>>> series;
  for (const auto& r : rows) series["figure2_" + r.scheme].emplace_back(r.K, r.mean_aif);
  for (auto& [k, v] : series) t.plots.emplace_back(k, v);
  t.metadata["config"] = cfg.to_json();
  t.metadata["config_hash"] = fmt::format("{:016x}", cfg.hash());
  t.metadata["version"] = kVersion;
  t.metadata["seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return t;
}

ResultTable run_figure1(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const BaseDensity f0 = density_by_name(cfg.density);
  ResultTable t;
  t.experiment = "figure1";
  std::vector<std::pair<double, double>> huber_curve, matched_curve, frontier_curve;
  for (double K : cfg.K_grid) {
    const LocationScaleSpec h = huber2_for(f0, K);
    const double aif = population_aif(h, f0);
    const double gamma = ls_if_profile(h, f0).gamma_u;
    const std::string cell = fmt::format("huber2/K={:.4f}", K);
    t.add(cell, "gamma_u", gamma);
    t.add(cell, "aif", aif);
    huber_curve.emplace_back(gamma, aif);
    const TradeoffPoint tp = best_split(f0, gamma, cfg.split_resolution, cfg.convention);
    const std::string mcell = fmt::format("optimal_at_huber/K={:.4f}", K);
    t.add(mcell, "xi", gamma);
    t.add(mcell, "feasible", tp.feasible ? 1.0 : 0.0);
    t.add(mcell, "aif", tp.aif);
    t.add(mcell, "xi1", tp.xi1);
    t.add(mcell, "xi2", tp.xi2);
    t.add(mcell, "gamma_u", tp.gamma_u);
    if (tp.feasible) matched_curve.emplace_back(gamma, tp.aif);
  }
  const auto frontier = tradeoff_frontier(f0, cfg.xi_grid, cfg.split_resolution, cfg.convention);
  for (const auto& tp : frontier) {
    const std::string cell = fmt::format("optimal/xi={:.4f}", tp.xi);
    t.add(cell, "feasible", tp.feasible ? 1.0 : 0.0);
    t.add(cell, "aif", tp.aif);
    t.add(cell, "xi1", tp.xi1);
    t.add(cell, "xi2", tp.xi2);
    t.add(cell, "gamma_u", tp.gamma_u);
    if (tp.feasible) frontier_curve.emplace_back(tp.xi, tp.aif);
  }
  const LocationScaleSpec ms = meanstd_spec();
  t.add("meanstd", "aif", population_aif(ms, f0));
  t.add("meanstd", "gamma_u", ls_if_profile(ms, f0).gamma_u);
  const PsiDesign un = design_unconstrained(f0, cfg.convention);
  t.add("unconstrained", "aif", un.aif);
  t.add("unconstrained", "gamma_u", un.gamma_u);
  t.plots.emplace_back("figure1_huber2", huber_curve);
  t.plots.emplace_back("figure1_optimal_matched", matched_curve);
  t.plots.emplace_back("figure1_optimal", frontier_curve);
  t.metadata["config"] = cfg.to_json();
  t.metadata["config_hash"] = fmt::format("{:016x}", cfg.hash());
  t.metadata["version"] = kVersion;
  t.metadata["seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return t;
}

ResultTable run_convergence(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const BaseDensity f0 = density_by_name(cfg.density);
  ResultTable t;
  t.experiment = "convergence";
  std::vector<double> lx, ly;
  std::vector<std::pair<double, double>> curve;
  for (const auto& [label, spec] :
       std::vector<std::pair<std::string, LocationScaleSpec>>{
           {"huber2", huber2_for(f0, cfg.huber_K)}, {"meanstd", meanstd_spec()}}) {
    const auto rows = monte_carlo_population_check(spec, f0, cfg.N_grid, cfg.seed, cfg.n_replicates);
    for (const auto& r : rows) {
      const std::string cell = fmt::format("{}/N={}", label, r.N);
      t.add(cell, "mean_aif", r.mean_aif);
      t.add(cell, "population", r.population);
      t.add(cell, "mean_abs_err", r.mean_abs_err);
      t.add(cell, "rel_err", r.rel_err);
      t.add(cell, "stderr", r.stderr_err);
      t.add(cell, "n_fail", r.n_fail);
      if (label == "huber2") {
        curve.emplace_back(r.N, r.mean_abs_err);
        if (r.mean_abs_err > 0) {
          lx.push_back(std::log10(static_cast<double>(r.N)));
          ly.push_back(std::log10(r.mean_abs_err));
        }
      }
    }
  }
  if (lx.size() >= 2) t.add("huber2", "loglog_slope", ls_fit(lx, ly).first);
  t.plots.emplace_back("convergence_huber2", curve);
  t.metadata["config"] = cfg.to_json();
  t.metadata["config_hash"] = fmt::format("{:016x}", cfg.hash());
  t.metadata["version"] = kVersion;
  t.metadata["seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return t;
}

void write_results(const ResultTable& t, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    std::ofstream f(fs::path(dir) / (t.experiment + ".csv"));
    if (!f) fail(ErrorKind::ConfigError, fmt::format("cannot write into '{}'", dir));
    f << t.to_csv();
  }
  {
    std::ofstream f(fs::path(dir) / (t.experiment + "_manifest.json"));
    f << dump_json(t.metadata) << "\n";
  }
  for (const auto& [name, pts] : t.plots) {
    std::ofstream f(fs::path(dir) / (name + ".csv"));
    for (const auto& [x, y] : pts) f << fmt17(x) << "," << fmt17(y) << "\n";
  }
}

}  // namespace aiflab
