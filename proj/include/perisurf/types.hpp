#pragma once

#include <complex>
#include <numbers>

#include <Eigen/Core>

namespace perisurf {

using cplx = std::complex<double>;
using VecC = Eigen::VectorXcd;
using VecR = Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

struct Point {
  double x1 = 0.0;
  double x2 = 0.0;
};

}  // namespace perisurf
