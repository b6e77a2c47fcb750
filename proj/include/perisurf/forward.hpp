#pragma once

#include <memory>
#include <vector>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "perisurf/bloch.hpp"
#include "perisurf/mesh.hpp"
#include "perisurf/surface.hpp"
#include "perisurf/waves.hpp"

namespace perisurf {

using SparseR = Eigen::SparseMatrix<double>;
using SparseC = Eigen::SparseMatrix<cplx>;

/// Discretization controls shared by every solve.
struct ForwardSettings {
  int n1 = 32;
  int n2 = 16;
  int order = 2;
  int truncation = 8;        // K: cells −K..K and N_α = 2K+1 nodes
  int fourier_modes = 32;    // M_f: DtN modes |j| ≤ M_f
  double gmres_tolerance = 1e-10;
  int gmres_max_iterations = 600;
};

/// Volume form ∫ A∇u·∇v − k² c u v on the open cell with the coefficients of
/// `choice` evaluated at x₁ + 2π·cell. Real symmetric, open node indexing.
SparseR assemble_volume(const CellMesh& mesh, const SurfaceModel& model,
                        ProfileChoice choice, int cell, double wavenumber);

/// Per-α quasi-periodic systems a_α of the periodic surface ζ, factorized.
/// Unknowns are the periodic nodes above the floor row; index
/// (row − 1)·nx + col.
class PeriodicSystem {
 public:
  /// Throws SingularSystem when a factorization fails; the message names α.
  PeriodicSystem(const SurfaceModel& model, double wavenumber, const CellMesh& mesh,
                 const AlphaGrid& grid, int fourier_modes = 32);

  const CellMesh& mesh() const { return mesh_; }
  const AlphaGrid& grid() const { return grid_; }
  double wavenumber() const { return k_; }
  int fourier_modes() const { return modes_; }
  int interior_size() const { return mesh_.nx() * (mesh_.ny() - 1); }
  const SurfaceModel& model() const { return model_; }

  /// e^{−2πiα_q}, the phase linking column nx to column 0.
  cplx theta(int q) const { return thetas_[q]; }

  /// A_q⁻¹ b, or A_q⁻ᴴ b when adjoint.
  VecC solve(int q, const VecC& b, bool adjoint = false) const;
  /// A_q^{IF} g for periodic floor data g (nx values), or (A_q^{IF})ᴴ x.
  VecC floor_coupling(int q, const VecC& g) const;
  VecC floor_coupling_adjoint(int q, const VecC& x) const;
  /// Interior-interior matrix (diagnostics and tests).
  const SparseC& matrix(int q) const { return blocks_[q]->interior; }

  /// Row j + M_f holds γ_j with û_j = γ_jᵀ w_top, the Fourier coefficient
  /// (1/2π)∫ w e^{−i(j−α_q)x₁} dx₁ of the quasi-periodic top trace.
  const Eigen::MatrixXcd& fourier(int q) const { return blocks_[q]->fourier; }

  /// Open-cell volume matrix of ζ (cell independent).
  const SparseR& volume() const { return volume_; }

 private:
  struct Block {
    SparseC interior;
    SparseC floor;
    Eigen::MatrixXcd fourier;
    Eigen::SparseLU<SparseC> lu;
  };

  SurfaceModel model_;
  double k_;
  CellMesh mesh_;
  AlphaGrid grid_;
  int modes_;
  std::vector<cplx> thetas_;
  SparseR volume_;
  std::vector<std::unique_ptr<Block>> blocks_;
};

/// The coupling form b restricted to the nodes of the perturbed cell J on
/// which it acts: B = (volume form of ζ_p) − (volume form of ζ).
class Coupling {
 public:
  Coupling() = default;
  Coupling(const PeriodicSystem& system, const SurfaceModel& perturbed);

  bool empty() const { return interior_.empty(); }
  int cell() const { return cell_; }
  /// Open-cell node indices of the coupled unknowns and floor nodes.
  const std::vector<int>& interior_nodes() const { return interior_; }
  const std::vector<int>& floor_nodes() const { return floor_; }
  const SparseR& interior_block() const { return b_rr_; }
  const SparseR& floor_block() const { return b_rf_; }

 private:
  int cell_ = 0;
  std::vector<int> interior_;
  std::vector<int> floor_;
  SparseR b_rr_;
  SparseR b_rf_;
};

struct SolveStats {
  int krylov_iterations = 0;
  double krylov_residual = 0.0;
};

/// Per-α interior right-hand sides and periodic floor data of one solve.
struct BlochLoad {
  std::vector<VecC> interior;  // per q, interior_size() (may be empty)
  std::vector<VecC> floor;     // per q, nx Dirichlet values (may be empty)
};

/// Solves the Bloch-coupled problem ∫a_α(w, z) + b(J⁻¹w, J⁻¹z) = load for
/// all α_q by Schur complement on the coupled unknowns. Returns full cell
/// fields (floor row = Dirichlet data). With `adjoint` the conjugate
/// transposed system is solved (floor data must then be empty).
/// Throws NonConvergence when the Krylov iteration hits its cap.
BlochField solve_perturbed(const PeriodicSystem& system, const Coupling& coupling,
                           const BlochLoad& load, const ForwardSettings& settings,
                           bool adjoint = false, SolveStats* stats = nullptr);

/// Sensitivity of the interior solution to the floor data: given the adjoint
/// solution X of the conjugate system, returns per α the cotangent
/// −(A^{IF})ᴴX − (coupling floor term)ᴴ on the periodic floor nodes.
std::vector<VecC> floor_data_adjoint(const PeriodicSystem& system,
                                     const Coupling& coupling, const BlochField& x);

/// Decoupled single-α solve with top load F (periodic top row, nx values).
CellField solve_cell_alpha(const PeriodicSystem& system, int q, const VecC& top_load);

/// Top loads ∫ F(α_q, x₁) φ̄ ds for the incident field's data f, folded
/// onto the periodic top row (nx values per q). f is sampled on cells −K..K.
std::vector<VecC> incident_top_loads(const PeriodicSystem& system,
                                     const IncidentField& incident);

/// Bloch transform of per-cell floor values g(x₁ + 2πj) (nx per cell).
std::vector<VecC> bloch_floor_data(const AlphaGrid& grid,
                                   const std::vector<VecC>& per_cell);
/// Adjoint of bloch_floor_data: per-cell Σ_q e^{−2πijα_q} r_q.
std::vector<VecC> bloch_floor_data_adjoint(const AlphaGrid& grid,
                                           const std::vector<VecC>& per_alpha);

/// Places a periodic top-row vector into an interior vector.
VecC embed_top(const PeriodicSystem& system, const VecC& top);

/// Open top-row traces (nx+1 values) per cell j = −K..K of the inverse
/// transform of w, and the adjoint map.
std::vector<VecC> top_traces(const PeriodicSystem& system, const BlochField& w);
std::vector<VecC> top_traces_adjoint(const PeriodicSystem& system,
                                     const std::vector<VecC>& traces);

/// Open top-row values of T⁺w per cell (Fourier evaluation of the DtN map).
std::vector<VecC> top_dtn_traces(const PeriodicSystem& system, const BlochField& w);

/// ∂w/∂x₂ at the floor nodes of the flattened cell, per cell j (nx values).
std::vector<VecC> floor_gradients(const PeriodicSystem& system, const BlochField& w);

/// FE evaluation of open top traces at measurement abscissae, and adjoint.
class TraceSampler {
 public:
  TraceSampler() = default;
  /// Throws InputError for points outside the truncated strip.
  TraceSampler(const CellMesh& mesh, int truncation, const std::vector<double>& x1);

  int size() const { return static_cast<int>(cells_.size()); }
  VecC sample(const std::vector<VecC>& traces) const;
  std::vector<VecC> adjoint(const VecC& values) const;

 private:
  int order_ = 2;
  int truncation_ = 0;
  int open_nx_ = 0;
  std::vector<int> cells_;
  std::vector<int> first_col_;
  std::vector<std::array<double, 3>> weights_;
};

/// Measurement line Γ_{A,H}: 2Q+1 points x_i = −A + i·A/Q at height H.
struct MeasurementLine {
  double half_width = 0.0;  // A
  int half_count = 1;       // Q
  double height = 0.0;      // H

  double spacing() const { return half_width / half_count; }
  int size() const { return 2 * half_count + 1; }
  std::vector<double> abscissae() const;
  /// Trapezoid weights of the discrete L²(Γ_{A,H}) inner product.
  VecR weights() const;
};

struct CauchyData {
  std::vector<double> points;  // x₁ of the samples, all at height `height`
  double height = 0.0;
  VecC values;                 // u^s
  VecC normals;                // ∂_ν u^s with ν = (0, 1)
};

/// Energy of the scattered trace in the outermost cells relative to all cells.
struct TruncationReport {
  double edge_fraction = 0.0;
  bool warning = false;  // edge_fraction > 1e−3
};

/// Scattering of one incident field by ζ_p: solve, then sample the Cauchy
/// data. Point sources use the Green's-function split about `reference_height`.
class ScatteringProblem {
 public:
  /// `surface` must share the periodic profile of the factorized system.
  ScatteringProblem(std::shared_ptr<const PeriodicSystem> system,
                    const SurfaceModel& surface, ForwardSettings settings);

  const PeriodicSystem& system() const { return *system_; }
  const Coupling& coupling() const { return coupling_; }
  const ForwardSettings& settings() const { return settings_; }
  const SurfaceModel& surface() const { return surface_; }

  /// Bloch-transformed data of the incident field.
  BlochLoad load(const IncidentField& incident, double reference_height = 0.0) const;

  /// Total field (plane wave, Herglotz) or split remainder v (point source).
  BlochField solve(const IncidentField& incident, double reference_height = 0.0,
                   SolveStats* stats = nullptr) const;

  /// Cauchy data of u^s on the measurement line from a solution of `solve`.
  CauchyData scattered_trace(const BlochField& w, const IncidentField& incident,
                             const MeasurementLine& line,
                             double reference_height = 0.0,
                             TruncationReport* report = nullptr) const;

 private:
  std::shared_ptr<const PeriodicSystem> system_;
  SurfaceModel surface_;
  Coupling coupling_;
  ForwardSettings settings_;
};

/// Quasi-periodicity parameter of a downward plane wave, folded into (−½, ½].
double plane_wave_alpha(double wavenumber, double theta);

struct Efficiency {
  int order = 0;
  double value = 0.0;
};

/// Reflection efficiencies (β_j/β_inc)|R_j|² of the propagating orders for a
/// scattered top trace of a single-α solution and unit plane-wave incidence.
std::vector<Efficiency> rayleigh_efficiencies(const PeriodicSystem& system, int q,
                                              const VecC& scattered_top,
                                              double incidence_angle);

}  // namespace perisurf
