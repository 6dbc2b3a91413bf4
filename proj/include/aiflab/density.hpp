#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

namespace aiflab {

enum class DensityKind { Normal, Laplace, Table };

// Symmetric base density f0 on the real line.
struct BaseDensity {
  DensityKind kind = DensityKind::Normal;
  std::string name;
  std::function<double(double)> pdf;
  std::function<double(double)> cdf;
  // F0(z) - 1/2 and 1 - F0(z) for z >= 0, free of cancellation
  std::function<double(double)> mass0;
  std::function<double(double)> sf;
  // upper-tail quantile: returns z with 1 - F0(z) = tail
  std::function<double(double)> upper_quantile;
  std::function<double(std::mt19937_64&)> sample;
  // pdf kinks on z >= 0 (table knots), used as quadrature breakpoints
  std::vector<double> kinks;
  // largest z where pdf > 0, +inf for unbounded support
  double support_end = 0.0;
};

BaseDensity normal_density();
BaseDensity laplace_density();
// Half-line table: rows (z, f) with z >= 0 ascending, mirrored to z < 0,
// linearly interpolated and renormalized to unit mass.
BaseDensity table_density(const std::vector<double>& z, const std::vector<double>& f,
                          const std::string& name = "table");
BaseDensity density_by_name(const std::string& spec);

// E[g(Z)] over the full line for an arbitrary g.
double expect(const BaseDensity& f0, const std::function<double(double)>& g,
              const std::vector<double>& breakpoints = {});
// int_0^inf g(z) f0(z) dz.
double half_expect(const BaseDensity& f0, const std::function<double(double)>& g,
                   const std::vector<double>& breakpoints = {});

}  // namespace aiflab
