#pragma once

#include <array>
#include <vector>

#include "perisurf/types.hpp"

namespace perisurf {

/// Uniform n₁ × n₂ tensor mesh of Lagrange elements on the flattened cell
/// (−π, π] × (h, H). Periodic node columns 0..nx−1 with nx = order·n₁; the
/// open cell adds column nx, the image of column 0 one period to the right.
/// Row 0 lies on the floor x₂ = h, row ny−1 on the top x₂ = H.
class CellMesh {
 public:
  CellMesh() = default;
  /// Throws InputError for non-positive counts, order ∉ {1, 2} or h ≥ H.
  CellMesh(int n1, int n2, int order, double floor, double ceiling);

  int n1() const { return n1_; }
  int n2() const { return n2_; }
  int order() const { return order_; }
  double floor() const { return h_; }
  double ceiling() const { return H_; }

  int nx() const { return order_ * n1_; }
  int ny() const { return order_ * n2_ + 1; }
  int open_nx() const { return nx() + 1; }
  int size() const { return nx() * ny(); }
  int open_size() const { return open_nx() * ny(); }

  double element_width() const { return kTwoPi / n1_; }
  double element_height() const { return (H_ - h_) / n2_; }
  double x1(int col) const { return -kPi + col * kTwoPi / nx(); }
  double x2(int row) const { return h_ + row * (H_ - h_) / (ny() - 1); }

  int node(int col, int row) const { return row * nx() + col; }
  int open_node(int col, int row) const { return row * open_nx() + col; }

  /// Number of nodes per element and per element edge.
  int local_size() const { return (order_ + 1) * (order_ + 1); }

  /// Open-cell node indices of element (ex, ey), local ordering b·(p+1) + a.
  void element_nodes(int ex, int ey, std::vector<int>& open_nodes) const;

  bool operator==(const CellMesh& o) const {
    return n1_ == o.n1_ && n2_ == o.n2_ && order_ == o.order_ && h_ == o.h_ &&
           H_ == o.H_;
  }

 private:
  int n1_ = 1;
  int n2_ = 1;
  int order_ = 1;
  double h_ = 0.0;
  double H_ = 1.0;
};

/// 1-D Lagrange basis of degree p on [0, 1] with equispaced nodes.
void lagrange_1d(int order, double xi, double* values, double* derivatives);

/// Element quadrature in reference coordinates [0, 1].
struct Quadrature1D {
  VecR nodes;
  VecR weights;
};
Quadrature1D reference_gauss(int points);

}  // namespace perisurf
