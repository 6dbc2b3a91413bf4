#include "aiflab/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "aiflab/aif.hpp"
#include "aiflab/designer.hpp"
#include "aiflab/errors.hpp"
#include "aiflab/experiments.hpp"
#include "aiflab/io.hpp"
#include "aiflab/location_scale.hpp"
#include "aiflab/regression.hpp"

namespace aiflab {

std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> out;
  auto num = [&](const std::string& t) {
    try {
      std::size_t used = 0;
      const double v = std::stod(t, &used);
      if (used != t.size()) throw std::invalid_argument(t);
      return v;
    } catch (const std::exception&) {
      fail(ErrorKind::ConfigError, fmt::format("bad grid value '{}'", t));
    }
  };
  if (s.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string p;
    while (std::getline(ss, p, ':')) parts.push_back(p);
    if (parts.size() != 3) fail(ErrorKind::ConfigError, "grid range must be start:stop:step");
    const double a = num(parts[0]), b = num(parts[1]), h = num(parts[2]);
    if (!(h > 0) || b < a) fail(ErrorKind::ConfigError, "grid range needs step > 0 and stop >= start");
    const int n = static_cast<int>(std::floor((b - a) / h + 1e-9));
    for (int i = 0; i <= n; ++i) out.push_back(a + i * h);
    return out;
  }
  std::stringstream ss(s);
  std::string p;
  while (std::getline(ss, p, ',')) out.push_back(num(p));
  if (out.empty()) fail(ErrorKind::ConfigError, "empty grid");
  return out;
}

namespace {

struct Opts {
  std::string config;
  bool verbose = false;
  std::optional<std::uint64_t> seed;

  std::string data;
  bool header = false;
  double p = 2.0;
  std::string estimator = "meanstd";
  double K = 1.5;
  std::optional<double> beta;
  std::string density = "normal";
  std::string table;
  std::string emit_attack;
  double delta = 1.0;
  std::string verify = "1e-2,1e-3,1e-4";
  std::string scheme = "huber";
  std::string schemes = "ols,huber,mallows,schweppe";
  std::string K_grid = "3.05:5:0.15";
  int q = 3, N = 100, replicates = 20;
  bool population = false;
  double xi = 3.0;
  std::optional<double> xi1;
  std::string emit_psi;
  std::string convention = "stated";
  double scale = 1.0;
  std::string xi_grid = "3:10:0.5";
  int split_resolution = 24;
  std::string experiment;
  bool full_scale = false;
  std::string out_dir;
};

std::vector<std::string> config_args(const std::string& path, const std::vector<std::string>& given) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::ConfigError, fmt::format("cannot open config '{}'", path));
  std::vector<std::string> extra;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      const auto b = s.find_last_not_of(" \t\r");
      return s.substr(a, b - a + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::ConfigError, fmt::format("config line {}: expected key=value", lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    const std::string flag = "--" + key;
    const bool on_cli = std::any_of(given.begin(), given.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (on_cli) continue;  // command line wins
    if (val == "true") {
      extra.push_back(flag);
    } else if (val == "false") {
      continue;
    } else {
      extra.push_back(flag);
      extra.push_back(val);
    }
  }
  return extra;
}

EstimatingSystem system_for(const Opts& o, int m) {
  const std::string& e = o.estimator;
  if (e == "meanstd" || e == "huber2" || e == "custom-table") {
    LocationScaleSpec ls;
    if (e == "meanstd") {
      ls = meanstd_spec();
    } else if (e == "huber2") {
      const BaseDensity f0 = density_by_name(o.density);
      ls = huber2_spec(o.K, o.K, o.beta ? *o.beta : huber2_beta(f0, o.K));
    } else {
      if (o.table.empty()) fail(ErrorKind::ConfigError, "custom-table needs --table <csv>");
      ls = spec_from_table_csv(o.table);
    }
    return as_system(to_mestimator(ls));
  }
  const SchemeKind k = parse_scheme(e);
  return regression_system({k, o.K}, m - 1);
}

LocationScaleSpec ls_spec_for(const Opts& o) {
  if (o.estimator == "meanstd") return meanstd_spec();
  if (o.estimator == "huber2") {
    const BaseDensity f0 = density_by_name(o.density);
    return huber2_spec(o.K, o.K, o.beta ? *o.beta : huber2_beta(f0, o.K));
  }
  if (o.estimator == "custom-table") {
    if (o.table.empty()) fail(ErrorKind::ConfigError, "custom-table needs --table <csv>");
    return spec_from_table_csv(o.table);
  }
  fail(ErrorKind::ConfigError, fmt::format("'{}' is not a location-scale estimator", o.estimator));
}

Json report_json(const AifReport& r, double delta) {
  Json j;
  j["aif"] = r.aif;
  j["p"] = r.p;
  j["m"] = r.m;
  j["N"] = r.N;
  j["theta"] = to_json(r.theta);
  j["sigma_star"] = to_json(r.sigma_star);
  if (r.maximizing_sigmas.size() > 1) {
    Json all = Json::array();
    for (const auto& s : r.maximizing_sigmas) all.push_back(to_json(s));
    j["maximizing_sigmas"] = all;
  }
  if (r.argmax_ties.size() > 1) j["argmax_ties"] = r.argmax_ties;
  j["condition"] = r.jac.condition;
  j["delta"] = delta;
  j["attack"] = to_json(Mat(synthesize_attack(r, delta)));
  if (!r.warnings.empty()) j["warnings"] = r.warnings;
  return j;
}

void emit_attack_csv(const std::string& path, const AifReport& r, double delta) {
  std::ofstream f(path);
  if (!f) fail(ErrorKind::ConfigError, fmt::format("cannot write '{}'", path));
  write_matrix_csv(f, synthesize_attack(r, delta));
}

Vec as_vector(const DataMatrix& d) {
  if (d.m() != 1) fail(ErrorKind::DimensionError, "location-scale data must have one column");
  return d.x().row(0).transpose();
}

DataMatrix need_data(const Opts& o) {
  if (o.data.empty()) fail(ErrorKind::ConfigError, "--data <csv> is required");
  return read_data_matrix(o.data, o.header);
}

Json design_json(const PsiDesign& d, const BaseDensity& f0) {
  Json j;
  j["density"] = d.density;
  j["convention"] = convention_name(d.convention);
  j["constrained"] = d.constrained;
  if (d.constrained) {
    j["xi"] = d.xi;
    j["xi1"] = d.xi1;
    j["xi2"] = d.xi2;
  }
  j["psi1"] = {{"nu", d.nu1}, {"vartheta1", d.theta1}, {"a1", d.a1}};
  j["psi2"] = {{"nu", d.nu2}, {"vartheta1", d.vartheta1}, {"vartheta2", d.vartheta2},
               {"a2", d.a2}, {"b", d.b}, {"psi2_at_zero", d.psi2_at_zero}};
  j["aif"] = d.aif;
  j["gamma_u"] = d.gamma_u;
  j["fisher_residual"] = fisher_residual(d, f0);
  j["kkt"] = {{"norm1", d.kkt.norm1}, {"norm2", d.kkt.norm2},   {"slack1", d.kkt.slack1},
              {"slack2", d.kkt.slack2}, {"slack3", d.kkt.slack3}, {"primal", d.kkt.primal},
              {"dual", d.kkt.dual},     {"clamp", d.kkt.clamp},   {"max", d.kkt.max()}};
  return j;
}

int run(CLI::App& app, const Opts& o, std::ostream& out) {
  auto* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();

  if (name == "solve") {
    const DataMatrix d = need_data(o);
    const EstimatingSystem sys = system_for(o, d.m());
    const SolveResult r = solve_ex(sys, d);
    Json j;
    j["estimator"] = o.estimator;
    j["theta"] = to_json(r.theta);
    j["residual"] = r.residual;
    j["iterations"] = r.iterations;
    out << dump_json(j) << "\n";
    return 0;
  }
  if (name == "aif" || name == "attack") {
    check_p(o.p);
    const DataMatrix d = need_data(o);
    const EstimatingSystem sys = system_for(o, d.m());
    const AifReport r = compute_aif(sys, d, o.p);
    Json j = report_json(r, o.delta);
    if (name == "attack") {
      const KktResidual k = attack_kkt(r, o.delta);
      j["kkt"] = {{"lambda", k.lambda}, {"stationarity", k.stationarity},
                  {"sign_violations", k.sign}, {"budget", k.budget}};
      Json rows = Json::array();
      for (const auto& row : verify_attack_firstorder(sys, d, r, parse_grid(o.verify)))
        rows.push_back({{"delta", row.delta}, {"ratio", row.ratio}, {"discrepancy", row.discrepancy}});
      j["first_order"] = rows;
    }
    if (!o.emit_attack.empty()) emit_attack_csv(o.emit_attack, r, o.delta);
    out << dump_json(j) << "\n";
    return 0;
  }
  if (name == "regress-aif") {
    check_p(o.p);
    const DataMatrix d = need_data(o);
    const RegressionData rd = RegressionData::from_stacked(d);
    const AifReport r = regression_aif(rd, {parse_scheme(o.scheme), o.K}, o.p);
    Json j = report_json(r, o.delta);
    j["scheme"] = o.scheme;
    j["K"] = o.K;
    if (!o.emit_attack.empty()) emit_attack_csv(o.emit_attack, r, o.delta);
    out << dump_json(j) << "\n";
    return 0;
  }
  if (name == "sweep") {
    check_p(o.p);
    std::vector<RegressionData> datasets;
    if (!o.data.empty()) {
      datasets.push_back(RegressionData::from_stacked(need_data(o)));
    } else {
      ExperimentConfig c = figure2_config(false);
      c.q = o.q;
      c.N = o.N;
      c.n_replicates = o.replicates;
      if (o.seed) c.seed = *o.seed;
      datasets = figure2_datasets(c);
    }
    std::vector<SchemeKind> kinds;
    std::stringstream ss(o.schemes);
    std::string s;
    while (std::getline(ss, s, ',')) kinds.push_back(parse_scheme(s));
    const auto rows = aif_vs_K_sweep(datasets, kinds, parse_grid(o.K_grid), o.p);
    out << "scheme,K,mean_aif,stderr,n_fail\n";
    for (const auto& r : rows)
      out << r.scheme << "," << fmt17(r.K) << "," << fmt17(r.mean_aif) << ","
          << fmt17(r.stderr_aif) << "," << r.n_fail << "\n";
    return 0;
  }
  if (name == "ls-aif") {
    const LocationScaleSpec spec = ls_spec_for(o);
    if (o.population) {
      const BaseDensity f0 = density_by_name(o.density);
      Json j;
      j["estimator"] = o.estimator;
      j["density"] = f0.name;
      j["population_aif"] = population_aif(spec, f0);
      j["gamma_u"] = ls_if_profile(spec, f0).gamma_u;
      out << dump_json(j) << "\n";
      return 0;
    }
    check_p(o.p);
    const Vec x = as_vector(need_data(o));
    const AifReport r = ls_aif(spec, x, o.p);
    Json j = report_json(r, o.delta);
    j["estimator"] = o.estimator;
    if (!o.emit_attack.empty()) emit_attack_csv(o.emit_attack, r, o.delta);
    out << dump_json(j) << "\n";
    return 0;
  }
  if (name == "design") {
    const BaseDensity f0 = density_by_name(o.density);
    const FisherConvention conv = parse_convention(o.convention);
    PsiDesign d;
    if (sub->count("--xi") == 0 && !o.xi1) {
      d = design_unconstrained(f0, conv);
    } else {
      const double xi1 = o.xi1 ? *o.xi1 : best_split(f0, o.xi, o.split_resolution, conv).xi1;
      if (!(xi1 > 0)) fail(ErrorKind::Infeasible, fmt::format("no feasible split for xi = {}", o.xi));
      d = design_constrained(f0, o.xi, xi1, conv);
    }
    if (!o.emit_psi.empty()) {
      std::ofstream f(o.emit_psi);
      if (!f) fail(ErrorKind::ConfigError, fmt::format("cannot write '{}'", o.emit_psi));
      f << "z,psi1,psi1',psi2,psi2'\n";
      for (std::size_t i = 0; i < d.grid_z.size(); ++i)
        f << fmt17(d.grid_z[i]) << "," << fmt17(o.scale * d.grid_psi1[i]) << ","
          << fmt17(o.scale * d.grid_dpsi1[i]) << "," << fmt17(o.scale * d.grid_psi2[i]) << ","
          << fmt17(o.scale * d.grid_dpsi2[i]) << "\n";
    }
    out << dump_json(design_json(d, f0)) << "\n";
    return 0;
  }
  if (name == "frontier") {
    const BaseDensity f0 = density_by_name(o.density);
    const auto pts = tradeoff_frontier(f0, parse_grid(o.xi_grid), o.split_resolution,
                                       parse_convention(o.convention));
    out << "xi,xi1,xi2,aif,gamma_u\n";
    for (const auto& t : pts) {
      if (!t.feasible) {
        out << fmt17(t.xi) << ",nan,nan,nan,nan\n";
        continue;
      }
      out << fmt17(t.xi) << "," << fmt17(t.xi1) << "," << fmt17(t.xi2) << "," << fmt17(t.aif)
          << "," << fmt17(t.gamma_u) << "\n";
    }
    return 0;
  }
  if (name == "experiment") {
    ExperimentConfig c;
    if (o.experiment == "figure1") {
      c = figure1_config();
      if (sub->count("--convention")) c.convention = parse_convention(o.convention);
    } else if (o.experiment == "figure2") {
      c = figure2_config(o.full_scale);
    } else if (o.experiment == "convergence") {
      c = convergence_config();
    } else {
      fail(ErrorKind::ConfigError, fmt::format("unknown experiment '{}'", o.experiment));
    }
    if (o.seed) c.seed = *o.seed;
    if (sub->count("--replicates")) c.n_replicates = o.replicates;
    const ResultTable t = c.name == "figure1"   ? run_figure1(c)
                          : c.name == "figure2" ? run_figure2(c)
                                                : run_convergence(c);
    if (!o.out_dir.empty()) write_results(t, o.out_dir);
    out << t.to_csv();
    return 0;
  }
  fail(ErrorKind::ConfigError, fmt::format("unknown subcommand '{}'", name));
}

void error_json(std::ostream& err, std::string_view kind, const std::string& msg) {
  Json j;
  j["error"] = std::string(kind);
  j["message"] = msg;
  err << dump_json(j, -1) << "\n";
}

}  // namespace

int dispatch(const std::vector<std::string>& args_in, std::ostream& out, std::ostream& err) {
  Opts o;
  CLI::App app{"Adversarial influence of M-estimators: AIF, attacks and optimal psi design"};
  app.name("aiflab");
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--config", o.config, "key=value file; command-line flags take precedence");
  app.add_flag("--verbose", o.verbose, "print the resolved configuration to stderr");
  app.add_option("--seed", o.seed, "override the configured seed");

  auto data_opts = [&](CLI::App* s) {
    s->add_option("--data", o.data, "CSV, one data point per row");
    s->add_flag("--header", o.header, "first CSV row is a header");
  };
  auto est_opts = [&](CLI::App* s) {
    s->add_option("--estimator", o.estimator,
                  "meanstd | huber2 | custom-table | ols | huber | mallows | schweppe");
    s->add_option("--K", o.K, "clip level");
    s->add_option("--beta", o.beta, "huber2 beta (default: Fisher-consistent under --density)");
    s->add_option("--density", o.density, "normal | laplace | table:<csv>");
    s->add_option("--table", o.table, "psi table CSV for custom-table");
  };

  auto* solve_cmd = app.add_subcommand("solve", "solve the estimating equations");
  data_opts(solve_cmd);
  est_opts(solve_cmd);

  for (const char* nm : {"aif", "attack"}) {
    auto* s = app.add_subcommand(nm, std::string(nm) == "aif" ? "AIF report for an estimator"
                                                              : "optimal attack with checks");
    data_opts(s);
    est_opts(s);
    s->add_option("--p", o.p, "attack norm, p >= 1");
    s->add_option("--delta", o.delta, "attack budget");
    s->add_option("--emit-attack", o.emit_attack, "write the attack as CSV");
    if (std::string(nm) == "attack")
      s->add_option("--verify", o.verify, "delta grid for the first-order check");
  }

  auto* reg = app.add_subcommand("regress-aif", "AIF of a robust regression scheme");
  data_opts(reg);
  reg->add_option("--scheme", o.scheme, "ols | huber | mallows | schweppe");
  reg->add_option("--K", o.K, "clip level");
  reg->add_option("--p", o.p, "attack norm");
  reg->add_option("--delta", o.delta, "attack budget");
  reg->add_option("--emit-attack", o.emit_attack, "write the attack as CSV");

  auto* sweep = app.add_subcommand("sweep", "mean AIF per scheme over a K grid");
  data_opts(sweep);
  sweep->add_option("--schemes", o.schemes, "comma list of schemes");
  sweep->add_option("--K-grid", o.K_grid, "start:stop:step or comma list");
  sweep->add_option("--p", o.p, "attack norm");
  sweep->add_option("--q", o.q, "covariates (generated data)");
  sweep->add_option("--N", o.N, "points (generated data)");
  sweep->add_option("--replicates", o.replicates, "datasets (generated data)");

  auto* ls = app.add_subcommand("ls-aif", "location-scale AIF");
  data_opts(ls);
  ls->add_option("--estimator", o.estimator, "meanstd | huber2 | custom-table");
  ls->add_option("--K", o.K, "huber2 clip level");
  ls->add_option("--beta", o.beta, "huber2 beta");
  ls->add_option("--table", o.table, "psi table CSV for custom-table");
  ls->add_option("--p", o.p, "attack norm");
  ls->add_option("--delta", o.delta, "attack budget");
  ls->add_option("--emit-attack", o.emit_attack, "write the attack as CSV");
  ls->add_flag("--population", o.population, "population limit under --density");
  ls->add_option("--density", o.density, "normal | laplace | table:<csv>");

  auto* des = app.add_subcommand("design", "optimal psi under an IF bound");
  des->add_option("--density", o.density, "laplace | normal | table:<csv>");
  des->add_option("--xi", o.xi, "gross-error sensitivity bound (omit for the unbounded design)");
  des->add_option("--xi1", o.xi1, "location share of the bound (searched if omitted)");
  des->add_option("--emit-psi", o.emit_psi, "write z, psi1, psi1', psi2, psi2' as CSV");
  des->add_option("--convention", o.convention, "stated | exact");
  des->add_option("--scale", o.scale, "multiply the emitted psi table");
  des->add_option("--split-resolution", o.split_resolution, "scan points for the xi1 search");

  auto* fr = app.add_subcommand("frontier", "AIF-vs-IF frontier");
  fr->add_option("--density", o.density, "laplace | normal | table:<csv>");
  fr->add_option("--xi-grid", o.xi_grid, "start:stop:step or comma list");
  fr->add_option("--split-resolution", o.split_resolution, "scan points for the xi1 search");
  fr->add_option("--convention", o.convention, "stated | exact");

  auto* ex = app.add_subcommand("experiment", "figure1 | figure2 | convergence");
  ex->add_option("name", o.experiment, "experiment name")->required();
  ex->add_flag("--full-scale", o.full_scale, "figure2 at q=5, N=500, 100 replicates");
  ex->add_option("--out", o.out_dir, "directory for CSV, manifest and plot files");
  ex->add_option("--replicates", o.replicates, "override replicate count");
  ex->add_option("--convention", o.convention, "figure1 convention (default exact)");

  std::vector<std::string> args = args_in;
  try {
    // pull in the config file before the real parse
    for (std::size_t i = 0; i < args.size(); ++i) {
      std::string path;
      if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
      if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
      if (!path.empty()) {
        auto extra = config_args(path, args);
        args.insert(args.end(), extra.begin(), extra.end());
        break;
      }
    }
  } catch (const AifError& e) {
    error_json(err, kind_name(e.kind()), e.what());
    return 1;
  }

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    error_json(err, "UsageError", e.what());
    return 1;
  }

  if (o.verbose) err << app.config_to_str(true, false);

  try {
    return run(app, o, out);
  } catch (const AifError& e) {
    error_json(err, kind_name(e.kind()), e.what());
    return is_usage_kind(e.kind()) ? 1 : 2;
  } catch (const std::exception& e) {
    error_json(err, "InternalError", e.what());
    return 2;
  }
}

}  // namespace aiflab
