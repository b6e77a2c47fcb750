#pragma once

#include <vector>

#include "perisurf/types.hpp"

namespace perisurf {

/// Uniform quasi-periodicity nodes α_q = q/N + shift, q = −K..K, N = 2K+1.
/// Any shift keeps the forward and inverse transforms exact discrete inverses.
class AlphaGrid {
 public:
  explicit AlphaGrid(int truncation = 0, double shift = 0.0);

  int truncation() const { return K_; }
  int size() const { return 2 * K_ + 1; }
  double shift() const { return shift_; }
  /// Node with zero-based index q ∈ [0, N).
  double node(int q) const { return static_cast<double>(q - K_) / size() + shift_; }
  /// e^{2πi j α_q}.
  cplx phase(int cell, int q) const;

  /// Grid whose nodes stay at least `margin` away from every Rayleigh
  /// anomaly |j − α| = k; shifts by half a grid step when needed.
  static AlphaGrid avoiding_anomalies(int truncation, double wavenumber,
                                      double margin = 1e-6);
  bool near_anomaly(double wavenumber, double margin) const;

 private:
  int K_;
  double shift_;
};

/// Complex nodal values on a tensor node set of nx columns × ny rows,
/// stored row-major (index = row * nx + col).
struct CellField {
  int nx = 0;
  int ny = 0;
  VecC values;

  CellField() = default;
  CellField(int cols, int rows) : nx(cols), ny(rows), values(VecC::Zero(cols * rows)) {}
  CellField(int cols, int rows, VecC v) : nx(cols), ny(rows), values(std::move(v)) {}

  cplx& at(int col, int row) { return values[row * nx + col]; }
  cplx at(int col, int row) const { return values[row * nx + col]; }
  bool same_shape(const CellField& o) const { return nx == o.nx && ny == o.ny; }
};

/// Cellwise strip function: cell j = −K..K stored at index j + K.
struct StripField {
  int truncation = 0;
  std::vector<CellField> cells;

  CellField& cell(int j) { return cells[j + truncation]; }
  const CellField& cell(int j) const { return cells[j + truncation]; }
};

/// α-indexed family of cell fields, one per node of `grid`.
struct BlochField {
  AlphaGrid grid;
  std::vector<CellField> fields;
};

/// w(α_q, ·) = Σ_j u_j e^{2πi j α_q}. Throws MeshMismatch when cells differ in
/// shape. The grid defaults to the unshifted one matching u's truncation.
BlochField bloch_forward(const StripField& u);
BlochField bloch_forward(const StripField& u, const AlphaGrid& grid);

/// u_j = (1/N) Σ_q w(α_q, ·) e^{−2πi j α_q}, j = −K..K.
StripField bloch_inverse(const BlochField& w);

/// The inverse formula evaluated at an arbitrary cell index.
CellField bloch_inverse_cell(const BlochField& w, int cell);

/// (1/N) Σ_q w(α_q, ·), the cell j = 0 of the inverse transform.
CellField central_cell_restriction(const BlochField& w);

/// Σ weights_i |v_i|², or the plain ℓ² sum with empty weights.
double weighted_norm2(const CellField& f, const VecR& weights = {});

}  // namespace perisurf
