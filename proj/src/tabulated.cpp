#include "aiflab/tabulated.hpp"

#include <algorithm>
#include <cmath>

#include "aiflab/errors.hpp"

namespace aiflab {

MonotoneCubic::MonotoneCubic(std::vector<double> z, std::vector<double> values,
                             std::vector<double> slopes)
    : z_(std::move(z)), v_(std::move(values)), s_(std::move(slopes)) {
  const std::size_t n = z_.size();
  if (n < 2 || v_.size() != n) fail(ErrorKind::ConfigError, "table needs >= 2 knots with values");
  for (std::size_t i = 1; i < n; ++i)
    if (!(z_[i] > z_[i - 1])) fail(ErrorKind::ConfigError, "table knots must increase strictly");
  std::vector<double> secant(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) secant[i] = (v_[i + 1] - v_[i]) / (z_[i + 1] - z_[i]);
  if (s_.empty()) {
    s_.resize(n);
    s_[0] = secant[0];
    s_[n - 1] = secant[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i)
      s_[i] = secant[i - 1] * secant[i] <= 0 ? 0.0 : 0.5 * (secant[i - 1] + secant[i]);
  } else if (s_.size() != n) {
    fail(ErrorKind::ConfigError, "slope count differs from knot count");
  }
  // Fritsch-Carlson limiter
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (secant[i] == 0.0) {
      s_[i] = 0.0;
      s_[i + 1] = 0.0;
      continue;
    }
    const double a = s_[i] / secant[i];
    const double b = s_[i + 1] / secant[i];
    const double r = a * a + b * b;
    if (r > 9.0) {
      const double t = 3.0 / std::sqrt(r);
      s_[i] = t * a * secant[i];
      s_[i + 1] = t * b * secant[i];
    }
  }
}

void MonotoneCubic::set_tail(std::function<double(double)> value,
                             std::function<double(double)> deriv) {
  tail_value_ = std::move(value);
  tail_deriv_ = std::move(deriv);
}

std::size_t MonotoneCubic::piece(double x) const {
  auto it = std::upper_bound(z_.begin(), z_.end(), x);
  std::size_t i = static_cast<std::size_t>(it - z_.begin());
  if (i == 0) return 0;
  return std::min(i - 1, z_.size() - 2);
}

double MonotoneCubic::value(double x) const {
  if (x > z_.back()) {
    if (tail_value_) return tail_value_(x);
    return v_.back() + s_.back() * (x - z_.back());
  }
  if (x < z_.front()) return v_.front() + s_.front() * (x - z_.front());
  const std::size_t i = piece(x);
  const double h = z_[i + 1] - z_[i];
  const double t = (x - z_[i]) / h;
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * v_[i] + (t3 - 2 * t2 + t) * h * s_[i] +
         (-2 * t3 + 3 * t2) * v_[i + 1] + (t3 - t2) * h * s_[i + 1];
}

double MonotoneCubic::deriv(double x) const {
  if (x > z_.back()) {
    if (tail_deriv_) return tail_deriv_(x);
    return s_.back();
  }
  if (x < z_.front()) return s_.front();
  const std::size_t i = piece(x);
  const double h = z_[i + 1] - z_[i];
  const double t = (x - z_[i]) / h;
  const double t2 = t * t;
  return (6 * t2 - 6 * t) * v_[i] / h + (3 * t2 - 4 * t + 1) * s_[i] +
         (-6 * t2 + 6 * t) * v_[i + 1] / h + (3 * t2 - 2 * t) * s_[i + 1];
}

}  // namespace aiflab
