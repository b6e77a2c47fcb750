#include "perisurf/bloch.hpp"

#include <cmath>

#include "perisurf/errors.hpp"

namespace perisurf {

AlphaGrid::AlphaGrid(int truncation, double shift) : K_(truncation), shift_(shift) {
  if (truncation < 0) throw InputError("Bloch truncation must be non-negative");
}

cplx AlphaGrid::phase(int cell, int q) const {
  return std::polar(1.0, kTwoPi * cell * node(q));
}

bool AlphaGrid::near_anomaly(double wavenumber, double margin) const {
  for (int q = 0; q < size(); ++q) {
    const double a = node(q);
    const int jlo = static_cast<int>(std::floor(a - wavenumber)) - 1;
    const int jhi = static_cast<int>(std::ceil(a + wavenumber)) + 1;
    for (int j = jlo; j <= jhi; ++j) {
      if (std::abs(std::abs(j - a) - wavenumber) < margin) return true;
    }
  }
  return false;
}

AlphaGrid AlphaGrid::avoiding_anomalies(int truncation, double wavenumber,
                                        double margin) {
  AlphaGrid g(truncation, 0.0);
  if (!g.near_anomaly(wavenumber, margin)) return g;
  AlphaGrid shifted(truncation, 0.5 / g.size());
  if (!shifted.near_anomaly(wavenumber, margin)) return shifted;
  return AlphaGrid(truncation, 0.25 / g.size());
}

BlochField bloch_forward(const StripField& u) {
  return bloch_forward(u, AlphaGrid(u.truncation));
}

BlochField bloch_forward(const StripField& u, const AlphaGrid& grid) {
  if (grid.truncation() != u.truncation ||
      static_cast<int>(u.cells.size()) != grid.size()) {
    throw MeshMismatch("strip truncation does not match the α grid");
  }
  const CellField& ref = u.cells.front();
  for (const auto& c : u.cells) {
    if (!c.same_shape(ref)) throw MeshMismatch("cells of a strip field disagree on the mesh");
  }
  BlochField w{grid, {}};
  w.fields.reserve(grid.size());
  for (int q = 0; q < grid.size(); ++q) {
    CellField f(ref.nx, ref.ny);
    for (int j = -u.truncation; j <= u.truncation; ++j) {
      f.values += grid.phase(j, q) * u.cell(j).values;
    }
    w.fields.push_back(std::move(f));
  }
  return w;
}

CellField bloch_inverse_cell(const BlochField& w, int cell) {
  const CellField& ref = w.fields.front();
  CellField out(ref.nx, ref.ny);
  const int n = w.grid.size();
  for (int q = 0; q < n; ++q) {
    out.values += std::conj(w.grid.phase(cell, q)) * w.fields[q].values;
  }
  out.values /= static_cast<double>(n);
  return out;
}

StripField bloch_inverse(const BlochField& w) {
  StripField u;
  u.truncation = w.grid.truncation();
  u.cells.reserve(w.grid.size());
  for (int j = -u.truncation; j <= u.truncation; ++j) {
    u.cells.push_back(bloch_inverse_cell(w, j));
  }
  return u;
}

CellField central_cell_restriction(const BlochField& w) {
  const CellField& ref = w.fields.front();
  CellField out(ref.nx, ref.ny);
  for (const auto& f : w.fields) out.values += f.values;
  out.values /= static_cast<double>(w.fields.size());
  return out;
}

double weighted_norm2(const CellField& f, const VecR& weights) {
  if (weights.size() == 0) return f.values.squaredNorm();
  return (weights.array() * f.values.array().abs2()).sum();
}

}  // namespace perisurf
