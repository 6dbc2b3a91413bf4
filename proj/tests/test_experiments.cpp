#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "aiflab/errors.hpp"
#include "aiflab/experiments.hpp"

using namespace aiflab;

namespace {

ExperimentConfig tiny_figure2() {
  ExperimentConfig c = figure2_config(false);
  c.q = 2;
  c.N = 25;
  c.n_replicates = 3;
  c.K_grid = {3.05, 4.0};
  return c;
}

}  // namespace

TEST_CASE("config presets and hashing") {
  const ExperimentConfig desk = figure2_config(false), full = figure2_config(true);
  CHECK(desk.q == 3);
  CHECK(desk.N == 100);
  CHECK(desk.n_replicates == 20);
  CHECK(full.q == 5);
  CHECK(full.N == 500);
  CHECK(full.n_replicates == 100);
  CHECK(desk.K_grid.front() == doctest::Approx(3.05));
  CHECK(desk.K_grid.back() == doctest::Approx(5.0));
  CHECK(desk.noise_std * desk.noise_std == doctest::Approx(2.0));
  CHECK(desk.hash() == figure2_config(false).hash());
  CHECK(desk.hash() != full.hash());
  CHECK(figure1_config().convention == FisherConvention::Exact);
}

TEST_CASE("regression sweep datasets are reproducible and replicate-stable") {
  ExperimentConfig c = tiny_figure2();
  const auto a = figure2_datasets(c);
  const auto b = figure2_datasets(c);
  REQUIRE(a.size() == 3);
  CHECK(a[2].y == b[2].y);
  c.n_replicates = 5;
  const auto more = figure2_datasets(c);
  CHECK(more[1].x == a[1].x);
  c.seed += 1;
  CHECK(figure2_datasets(c)[0].y != a[0].y);
}

TEST_CASE("regression sweep run: one row per scheme and K, OLS flat") {
  const ResultTable t = run_figure2(tiny_figure2());
  CHECK(t.get("ols/K=3.0500", "mean_aif") == t.get("ols/K=4.0000", "mean_aif"));
  for (const char* s : {"huber", "mallows", "schweppe"}) CHECK(t.get(std::string(s) + "/K=3.0500", "mean_aif") > 0);
  CHECK(t.metadata["version"] == kVersion);
  CHECK_THROWS_AS(t.get("lms/K=1.0000", "mean_aif"), AifError);
  const std::string csv = t.to_csv();
  CHECK(csv.rfind("experiment,cell,metric,value,replicate", 0) == 0);
  CHECK(csv == run_figure2(tiny_figure2()).to_csv());
}

TEST_CASE("results are written with a manifest and plot series") {
  const auto dir = std::filesystem::temp_directory_path() / "aiflab_experiment_test";
  std::filesystem::remove_all(dir);
  write_results(run_figure2(tiny_figure2()), dir.string());
  CHECK(std::filesystem::exists(dir / "figure2.csv"));
  CHECK(std::filesystem::exists(dir / "figure2_manifest.json"));
  CHECK(std::filesystem::exists(dir / "figure2_ols.csv"));
  std::ifstream m(dir / "figure2_manifest.json");
  const Json j = Json::parse(m);
  CHECK(j.contains("config_hash"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("convergence run reports errors and a slope") {
  ExperimentConfig c = convergence_config();
  c.N_grid = {100, 1000};
  c.n_replicates = 4;
  const ResultTable t = run_convergence(c);
  CHECK(t.get("meanstd/N=100", "mean_abs_err") < 1e-10);
  CHECK(t.get("huber2/N=1000", "mean_abs_err") < t.get("huber2/N=100", "mean_abs_err"));
  CHECK(t.get("huber2", "loglog_slope") < 0);
}
