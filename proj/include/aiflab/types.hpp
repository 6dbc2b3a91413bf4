#pragma once

#include <Eigen/Dense>

namespace aiflab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// m x N observations, one data point per column.
class DataMatrix {
 public:
  DataMatrix() = default;
  explicit DataMatrix(Mat entries);

  int m() const { return static_cast<int>(x_.rows()); }
  int N() const { return static_cast<int>(x_.cols()); }
  const Mat& x() const { return x_; }
  auto point(int n) const { return x_.col(n); }

  DataMatrix perturbed(const Mat& delta) const;

 private:
  Mat x_;
};

// Throws NumericsError if any entry is non-finite.
void require_finite(const Vec& v, const char* what);
void require_finite(const Mat& v, const char* what);

}  // namespace aiflab
