#pragma once

#include <utility>

#include "perisurf/types.hpp"

namespace perisurf {

/// 2π-periodic profile ζ expanded in the real trigonometric basis
/// {1, cos t, sin t, cos 2t, sin 2t, ...}.
class PeriodicProfile {
 public:
  PeriodicProfile() = default;
  explicit PeriodicProfile(VecR coeffs);

  /// Constant profile of height `c` carried in `size` coefficients.
  static PeriodicProfile constant(double c, int size);

  int size() const { return static_cast<int>(coeffs_.size()); }
  const VecR& coeffs() const { return coeffs_; }

  double value(double t) const;
  double derivative(double t) const;

  /// Basis function φ_m (zero-based m) and its derivative.
  static double basis(int m, double t);
  static double basis_derivative(int m, double t);

  /// Coefficients of t ↦ ζ(t + dx). Integer multiples of 2π leave the
  /// coefficients bit-identical.
  PeriodicProfile shifted(double dx) const;

  /// Extrema sampled on a fine grid of one period.
  std::pair<double, double> range() const;

 private:
  VecR coeffs_;
};

/// Shapes a perturbation can take. kBumps is the reconstruction space Y_N;
/// the analytic shapes reproduce the two reference perturbations verbatim.
enum class PerturbationShape { kBumps, kExample1, kExample2 };

/// Local perturbation p supported in (−π, π) + 2πJ.
class PerturbationProfile {
 public:
  PerturbationProfile() = default;

  static PerturbationProfile zero(int basis_size = 0, int cell = 0);
  static PerturbationProfile bumps(VecR coeffs, int cell);
  /// `scale` multiplies the analytic formula.
  static PerturbationProfile analytic(PerturbationShape shape, int cell,
                                      double scale = 1.0);

  /// Half-width of the bump functions for an N-term basis.
  static double bump_width(int basis_size);
  /// Center of bump n (cell-local coordinate).
  static double bump_center(int n, int basis_size);
  /// ψ_n in cell-local coordinate s ∈ (−π, π), and its derivative.
  static double bump(int n, int basis_size, double s);
  static double bump_derivative(int n, int basis_size, double s);

  PerturbationShape shape() const { return shape_; }
  int cell_index() const { return cell_; }
  double scale() const { return scale_; }
  const VecR& coeffs() const { return coeffs_; }
  int size() const { return static_cast<int>(coeffs_.size()); }
  bool is_zero() const;

  double value(double t) const;
  double derivative(double t) const;
  double local_value(double s) const;
  double local_derivative(double s) const;

  /// Cell-local support interval [lo, hi] outside which p vanishes.
  std::pair<double, double> local_support() const;

  /// ψ_n(t) in global coordinates (zero outside the perturbed cell).
  double basis(int n, double t) const;

  PerturbationProfile with_cell(int cell) const;

 private:
  PerturbationShape shape_ = PerturbationShape::kBumps;
  VecR coeffs_;
  int cell_ = 0;
  double scale_ = 1.0;
};

enum class ProfileChoice { kPeriodic, kPerturbed };

/// ζ_p = ζ + p together with the strip (h, H) and the flattening height H₀.
class SurfaceModel {
 public:
  SurfaceModel(PeriodicProfile periodic, PerturbationProfile perturbation,
               double strip_floor, double strip_ceiling,
               double flattening_height);

  /// H₀ used when a configuration leaves it unset: close to the ceiling, so
  /// that the cubic blend stays monotone for surfaces high in the strip.
  static double default_flattening_height(double strip_ceiling,
                                          double max_height);

  const PeriodicProfile& periodic() const { return periodic_; }
  const PerturbationProfile& perturbation() const { return perturbation_; }
  double floor() const { return h_; }
  double ceiling() const { return H_; }
  double flattening_height() const { return H0_; }

  double height(double t, ProfileChoice choice = ProfileChoice::kPerturbed) const;
  double slope(double t, ProfileChoice choice = ProfileChoice::kPerturbed) const;

  SurfaceModel with_periodic(PeriodicProfile periodic) const;
  SurfaceModel with_perturbation(PerturbationProfile perturbation) const;

 private:
  PeriodicProfile periodic_;
  PerturbationProfile perturbation_;
  double h_;
  double H_;
  double H0_;
};

/// ζ_p(t).
double eval_surface(const SurfaceModel& model, double t);

/// Φ(x) = (x₁, x₂ + ((x₂−H₀)/(h−H₀))³ (f(x₁)−h)) below H₀, identity above.
Point flatten_map(const SurfaceModel& model, ProfileChoice choice, Point x);

/// Entries of the 2×2 Jacobian ∇Φ = [[1, 0], [a, b]].
struct MapJacobian {
  double a = 0.0;  // ∂Φ₂/∂x₁
  double b = 1.0;  // ∂Φ₂/∂x₂ = det ∇Φ
};
MapJacobian flatten_jacobian(const SurfaceModel& model, ProfileChoice choice,
                             Point x);

/// Pulled-back coefficients at one point: A = |det∇Φ|(∇Φ)⁻¹(∇Φ)⁻ᵀ, c = |det∇Φ|.
struct CoefficientSample {
  double a11 = 1.0;
  double a12 = 0.0;
  double a22 = 1.0;
  double c = 1.0;
};

inline constexpr double kDetTolerance = 1e-6;

/// Evaluates A and c of the flattening for ζ or ζ_p.
class CoefficientFields {
 public:
  CoefficientFields(const SurfaceModel& model, ProfileChoice choice)
      : model_(&model), choice_(choice) {}

  /// Throws DegenerateMap when det ∇Φ ≤ kDetTolerance.
  CoefficientSample at(Point x) const;

 private:
  const SurfaceModel* model_;
  ProfileChoice choice_;
};

CoefficientFields coefficient_fields(const SurfaceModel& model,
                                     ProfileChoice choice);

/// Shifts the frame by x ↦ x − 2πJ so the perturbation moves from cell J to
/// cell 0 when J equals its cell index.
SurfaceModel translate_model(const SurfaceModel& model, int shift);

}  // namespace perisurf
