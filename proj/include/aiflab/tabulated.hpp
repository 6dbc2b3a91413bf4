#pragma once

#include <functional>
#include <memory>
#include <vector>

namespace aiflab {

// Piecewise cubic Hermite on knots z_0 < ... < z_K with slopes limited by
// Fritsch-Carlson so nondecreasing data stay nondecreasing. Outside the knots
// the optional tail callbacks take over; without them the last slope is
// carried on linearly.
class MonotoneCubic {
 public:
  MonotoneCubic() = default;
  // slopes empty: Fritsch-Carlson slopes from the data
  MonotoneCubic(std::vector<double> z, std::vector<double> values,
                std::vector<double> slopes = {});

  double value(double x) const;
  double deriv(double x) const;

  const std::vector<double>& knots() const { return z_; }
  const std::vector<double>& values() const { return v_; }
  const std::vector<double>& slopes() const { return s_; }
  double lo() const { return z_.front(); }
  double hi() const { return z_.back(); }

  void set_tail(std::function<double(double)> value, std::function<double(double)> deriv);
  bool has_tail() const { return static_cast<bool>(tail_value_); }

 private:
  std::size_t piece(double x) const;
  std::vector<double> z_, v_, s_;
  std::function<double(double)> tail_value_, tail_deriv_;
};

}  // namespace aiflab
