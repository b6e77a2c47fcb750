#pragma once

#include <vector>

#include <Eigen/Core>

#include "perisurf/forward.hpp"

namespace perisurf {

/// Uniform sampling nodes on [a, b] × [c, d]: z₁ runs from a to b inclusive
/// over M₁ rows, z₂ = c + (d − c)·m/M₂ for the 1-based column m, so that a
/// column index maps to a height exactly as in the initial-guess formula.
struct SamplingGrid {
  double a = 0.0, b = 1.0, c = 0.0, d = 1.0;
  int m1 = 2;
  int m2 = 1;

  /// Throws InputError unless a < b, c < d, M₁ ≥ 2, M₂ ≥ 1.
  void validate() const;
  double z1(int row) const { return a + (b - a) * row / (m1 - 1); }   // row 0..M₁−1
  double z2(int col) const { return c + (d - c) * (col + 1) / m2; }   // col 0..M₂−1
};

struct IndicatorMatrix {
  Eigen::MatrixXd values;   // M₁ × M₂, rows indexed by z₁
  std::vector<int> argmax;  // per row, 1-based column of the largest value
};

/// I_A(z) of the discrete imaging formula with R + 1 half-circle directions.
/// All Cauchy data must share one measurement grid.
double imaging_value(Point z, const std::vector<CauchyData>& data,
                     const std::vector<Point>& sources, int half_circle_order,
                     double wavenumber);

IndicatorMatrix indicator_matrix(const SamplingGrid& grid,
                                 const std::vector<CauchyData>& data,
                                 const std::vector<Point>& sources,
                                 int half_circle_order, double wavenumber);

/// c₁⁰ = c + (d − c)·(1/(M₁M₂))·Σ_j max_j.
double estimate_c0(const IndicatorMatrix& matrix, const SamplingGrid& grid);

struct LocationReport {
  std::vector<int> cells;            // complete cells inside [a, b]
  std::vector<double> deviations;    // L¹ deviation from the median profile
  int best = 0;
};

/// Cell whose argmax-height profile deviates most from the median cell
/// profile. Throws AmbiguousLocation when the two largest deviations are
/// within 10% of each other (including the all-zero case).
int estimate_J(const IndicatorMatrix& matrix, const SamplingGrid& grid,
               LocationReport* report = nullptr);

}  // namespace perisurf
