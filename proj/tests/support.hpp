#pragma once

#include <functional>
#include <random>

#include "aiflab/types.hpp"

namespace testsupport {

using aiflab::Mat;
using aiflab::Vec;

// Central differences of F: R^n -> R^k, returned as k x n.
inline Mat fd_jacobian(const std::function<Vec(const Vec&)>& F, const Vec& x, double h = 1e-6) {
  const Vec f0 = F(x);
  Mat J(f0.size(), x.size());
  for (int i = 0; i < x.size(); ++i) {
    const double step = h * std::max(1.0, std::abs(x(i)));
    Vec xp = x, xm = x;
    xp(i) += step;
    xm(i) -= step;
    J.col(i) = (F(xp) - F(xm)) / (2.0 * step);
  }
  return J;
}

inline double rel_err(const Mat& a, const Mat& b) {
  const double scale = std::max({1.0, a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()});
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

inline Vec normal_vec(std::mt19937_64& rng, int n, double sd = 1.0, double mean = 0.0) {
  std::normal_distribution<double> d(mean, sd);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = d(rng);
  return v;
}

inline Mat normal_mat(std::mt19937_64& rng, int r, int c) {
  std::normal_distribution<double> d;
  Mat m(r, c);
  for (int j = 0; j < c; ++j)
    for (int i = 0; i < r; ++i) m(i, j) = d(rng);
  return m;
}

inline aiflab::DataMatrix row_data(const Vec& v) { return aiflab::DataMatrix(Mat(v.transpose())); }

}  // namespace testsupport
