#include "aiflab/density.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <memory>

#include "aiflab/errors.hpp"
#include "aiflab/io.hpp"
#include "aiflab/numerics.hpp"

namespace aiflab {

namespace {

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }
double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

BaseDensity normal_density() {
  BaseDensity d;
  d.kind = DensityKind::Normal;
  d.name = "normal";
  d.pdf = normal_pdf;
  d.cdf = normal_cdf;
  d.mass0 = [](double z) { return 0.5 * std::erf(z / std::sqrt(2.0)); };
  d.sf = [](double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); };
  d.upper_quantile = [](double tail) {
    auto g = [tail](double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)) - tail; };
    return find_root(g, 0.0, 40.0, 1e-14);
  };
  d.sample = [](std::mt19937_64& rng) {
    return std::normal_distribution<double>(0.0, 1.0)(rng);
  };
  d.support_end = kInf;
  return d;
}

BaseDensity laplace_density() {
  BaseDensity d;
  d.kind = DensityKind::Laplace;
  d.name = "laplace";
  d.pdf = [](double z) { return 0.5 * std::exp(-std::abs(z)); };
  d.cdf = [](double z) {
    return z >= 0 ? 1.0 - 0.5 * std::exp(-z) : 0.5 * std::exp(z);
  };
  d.mass0 = [](double z) { return -0.5 * std::expm1(-z); };
  d.sf = [](double z) { return 0.5 * std::exp(-z); };
  d.upper_quantile = [](double tail) { return -std::log(2.0 * tail); };
  d.sample = [](std::mt19937_64& rng) {
    const double e = std::exponential_distribution<double>(1.0)(rng);
    return std::uniform_int_distribution<int>(0, 1)(rng) ? e : -e;
  };
  d.support_end = kInf;
  return d;
}

BaseDensity table_density(const std::vector<double>& z, const std::vector<double>& f,
                          const std::string& name) {
  if (z.size() != f.size() || z.size() < 2)
    fail(ErrorKind::ConfigError, "density table needs at least two (z, f) rows");
  if (z.front() != 0.0)
    fail(ErrorKind::ConfigError, "density table must start at z = 0");
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!std::isfinite(z[i]) || !std::isfinite(f[i]) || f[i] < 0)
      fail(ErrorKind::ConfigError, "density table has a negative or non-finite entry");
    if (i > 0 && !(z[i] > z[i - 1]))
      fail(ErrorKind::ConfigError, "density table z must be strictly increasing");
  }
  struct Tab {
    std::vector<double> z, f, cum;
  };
  auto t = std::make_shared<Tab>();
  t->z = z;
  t->f = f;
  t->cum.assign(z.size(), 0.0);
  for (std::size_t i = 1; i < z.size(); ++i)
    t->cum[i] = t->cum[i - 1] + 0.5 * (f[i] + f[i - 1]) * (z[i] - z[i - 1]);
  const double half = t->cum.back();
  if (!(half > 0)) fail(ErrorKind::ConfigError, "density table has zero mass");
  for (auto& v : t->f) v /= 2.0 * half;
  for (auto& v : t->cum) v /= 2.0 * half;

  auto piece = [t](double a) -> std::size_t {
    auto it = std::upper_bound(t->z.begin(), t->z.end(), a);
    return static_cast<std::size_t>(it - t->z.begin()) - 1;
  };
  auto pdf = [t, piece](double x) {
    const double a = std::abs(x);
    if (a >= t->z.back()) return a == t->z.back() ? t->f.back() : 0.0;
    const std::size_t i = piece(a);
    const double w = (a - t->z[i]) / (t->z[i + 1] - t->z[i]);
    return (1 - w) * t->f[i] + w * t->f[i + 1];
  };
  // mass in [0, |x|]
  auto half_mass = [t, piece](double a) {
    if (a >= t->z.back()) return 0.5;
    const std::size_t i = piece(a);
    const double h = t->z[i + 1] - t->z[i];
    const double s = a - t->z[i];
    return t->cum[i] + t->f[i] * s + (t->f[i + 1] - t->f[i]) * s * s / (2 * h);
  };
  auto inv_half = [t, half_mass](double m) {
    // m in [0, 0.5]
    auto it = std::upper_bound(t->cum.begin(), t->cum.end(), m);
    std::size_t i = static_cast<std::size_t>(it - t->cum.begin());
    if (i == 0) return 0.0;
    if (i >= t->cum.size()) return t->z.back();
    --i;
    const double lo = t->z[i], hi = t->z[i + 1];
    return find_root([&](double a) { return half_mass(a) - m; }, lo, hi, 1e-15);
  };

  BaseDensity d;
  d.kind = DensityKind::Table;
  d.name = name;
  d.pdf = pdf;
  d.cdf = [half_mass](double x) {
    return x >= 0 ? 0.5 + half_mass(x) : 0.5 - half_mass(-x);
  };
  d.mass0 = half_mass;
  d.sf = [half_mass](double x) { return 0.5 - half_mass(x); };
  d.upper_quantile = [inv_half](double tail) { return inv_half(0.5 - tail); };
  d.sample = [inv_half](std::mt19937_64& rng) {
    const double u = std::uniform_real_distribution<double>(0.0, 0.5)(rng);
    const double a = inv_half(u);
    return std::uniform_int_distribution<int>(0, 1)(rng) ? a : -a;
  };
  d.kinks = std::vector<double>(z.begin() + 1, z.end());
  d.support_end = z.back();
  return d;
}

BaseDensity density_by_name(const std::string& spec) {
  if (spec == "normal") return normal_density();
  if (spec == "laplace") return laplace_density();
  if (spec.rfind("table:", 0) == 0) {
    const std::string path = spec.substr(6);
    auto rows = read_csv_rows(path, /*header=*/true);
    std::vector<double> z, f;
    for (const auto& r : rows) {
      if (r.size() < 2)
        fail(ErrorKind::ConfigError, "density table rows need two columns (z, f)");
      z.push_back(r[0]);
      f.push_back(r[1]);
    }
    return table_density(z, f, "table:" + path);
  }
  fail(ErrorKind::ConfigError, fmt::format("unknown density '{}'", spec));
}

double half_expect(const BaseDensity& f0, const std::function<double(double)>& g,
                   const std::vector<double>& breakpoints) {
  std::vector<double> bp = breakpoints;
  bp.insert(bp.end(), f0.kinks.begin(), f0.kinks.end());
  auto integrand = [&](double z) {
    const double p = f0.pdf(z);
    return p == 0.0 ? 0.0 : g(z) * p;
  };
  return integrate(integrand, 0.0, std::isinf(f0.support_end) ? kInf : f0.support_end, bp);
}

double expect(const BaseDensity& f0, const std::function<double(double)>& g,
              const std::vector<double>& breakpoints) {
  std::vector<double> bp;
  for (double b : breakpoints) bp.push_back(std::abs(b));
  const double pos = half_expect(f0, g, bp);
  const double negpart = half_expect(f0, [&](double z) { return g(-z); }, bp);
  return pos + negpart;
}

}  // namespace aiflab
