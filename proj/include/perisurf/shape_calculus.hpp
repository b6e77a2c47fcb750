#pragma once

#include <memory>
#include <vector>

#include "perisurf/forward.hpp"

namespace perisurf {

/// A real function on the surface sampled at the floor nodes of every cell
/// (cell j at index j + K, nx values each; x₁ = mesh.x1(c) + 2πj).
using SurfaceSamples = std::vector<VecR>;

/// Forward solution of one incident field for a fixed surface, cached with
/// everything the derivative and its adjoint need.
class ScatterOperatorContext {
 public:
  ScatterOperatorContext(std::shared_ptr<const PeriodicSystem> system,
                         const SurfaceModel& surface, const IncidentField& incident,
                         const MeasurementLine& line, const ForwardSettings& settings);

  const ScatteringProblem& problem() const { return problem_; }
  const SurfaceModel& surface() const { return problem_.surface(); }
  const PeriodicSystem& system() const { return problem_.system(); }
  const IncidentField& incident() const { return incident_; }
  const MeasurementLine& line() const { return line_; }
  const VecR& measurement_weights() const { return weights_; }

  /// Scattered trace u^s at the measurement points.
  const VecC& scattered() const { return scattered_; }
  /// ∂u/∂x₂ on the surface at the floor nodes, per cell.
  const std::vector<VecC>& surface_gradient() const { return gradient_; }
  /// Parameter-domain quadrature weights ω of the floor nodes.
  const VecR& surface_weights() const { return omega_; }

  /// Samples of t ↦ fn(t) at the floor nodes.
  template <class Fn>
  SurfaceSamples sample(Fn&& fn) const {
    const CellMesh& mesh = system().mesh();
    const int K = system().grid().truncation();
    SurfaceSamples out(2 * K + 1, VecR(mesh.nx()));
    for (int j = -K; j <= K; ++j) {
      for (int c = 0; c < mesh.nx(); ++c) out[j + K][c] = fn(mesh.x1(c) + kTwoPi * j);
    }
    return out;
  }

  /// ⟨a, b⟩ over the surface with the weights ω.
  double surface_inner(const SurfaceSamples& a, const SurfaceSamples& b) const;
  /// Discrete L²(Γ_{A,H}) inner product Σ wᵢ aᵢ b̄ᵢ.
  cplx trace_inner(const VecC& a, const VecC& b) const;

 private:
  ScatteringProblem problem_;
  IncidentField incident_;
  MeasurementLine line_;
  VecR weights_;
  VecC scattered_;
  std::vector<VecC> gradient_;
  VecR omega_;
};

/// S(f) = u^s|Γ_H at the measurement points.
VecC apply_S(const ScatterOperatorContext& ctx);

/// DS(f)h: top trace of u′ solving the Helmholtz problem with u′ = −(∂u/∂x₂)h
/// on the surface and the radiation condition.
VecC apply_DS(const ScatterOperatorContext& ctx, const SurfaceSamples& h,
              SolveStats* stats = nullptr);

/// [DS(f)]*φ, real valued, with Re⟨DS h, φ⟩ = ⟨h, DS*φ⟩ in the discrete inner
/// products above (exact discrete adjoint of apply_DS).
SurfaceSamples apply_DS_star(const ScatterOperatorContext& ctx, const VecC& phi,
                             SolveStats* stats = nullptr);

/// Directions of the coefficient spaces: h = Σ δc_m φ_m (periodic basis) and
/// h = Σ δd_n ψ_n (bumps in the perturbed cell).
SurfaceSamples periodic_direction(const ScatterOperatorContext& ctx, const VecR& dc);
SurfaceSamples perturbation_direction(const ScatterOperatorContext& ctx, const VecR& dd);

VecC apply_MA(const ScatterOperatorContext& ctx, const VecR& dc);
VecC apply_MB(const ScatterOperatorContext& ctx, const VecR& dd);
/// (⟨φ_m, Qφ⟩)_m and (⟨ψ_n, Qφ⟩)_n with Q = [DS]*.
VecR apply_MA_star(const ScatterOperatorContext& ctx, const VecC& phi, int size);
VecR apply_MB_star(const ScatterOperatorContext& ctx, const VecC& phi, int size);

}  // namespace perisurf
