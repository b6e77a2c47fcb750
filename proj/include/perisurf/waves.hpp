#pragma once

#include <vector>

#include "perisurf/bloch.hpp"
#include "perisurf/types.hpp"

namespace perisurf {

/// Φ_k(x, y) = (i/4) H_0^{(1)}(k|x − y|) and its x-gradient.
class FundamentalSolution {
 public:
  explicit FundamentalSolution(double wavenumber) : k_(wavenumber) {}
  double wavenumber() const { return k_; }
  /// Throws SingularPoint for x = y.
  cplx value(Point x, Point y) const;
  void value_and_gradient(Point x, Point y, cplx& value, cplx& d1, cplx& d2) const;

 private:
  double k_;
};

enum class IncidentKind { kPlaneWave, kPointSource, kHerglotz };

/// Herglotz density g(t) = 2¹² s⁶(1−s)⁶ with s = (t−a)/(b−a) on [a, b].
/// The angle integral uses Gauss panels of `quadrature_order` nodes; the
/// panel count grows with the phase variation at the evaluation point.
struct HerglotzDensity {
  double lower = 0.0;
  double upper = 1.0;
  int quadrature_order = 64;

  double operator()(double t) const;
};

/// u^i(x₁ + shift, x₂) for one of the supported incident waves.
struct IncidentField {
  IncidentKind kind = IncidentKind::kPlaneWave;
  double wavenumber = 1.0;
  double shift = 0.0;
  double angle = 0.0;       // plane wave incidence angle θ
  bool upward = false;      // plane wave travelling upward instead of downward
  Point source;             // point source location y
  HerglotzDensity density;  // Herglotz density

  static IncidentField plane_wave(double k, double theta, bool upward = false);
  static IncidentField point_source(double k, Point y);
  static IncidentField herglotz(double k, HerglotzDensity g = {}, double shift = 0.0);
  IncidentField shifted(double dx) const;
};

struct FieldSample {
  cplx value;
  cplx d1;  // ∂/∂x₁
  cplx d2;  // ∂/∂x₂
};

/// Value and analytic gradient. Throws SingularPoint at a point source.
FieldSample eval_incident(const IncidentField& field, Point x);

/// i√(k² − ξ²) on the branch with non-negative imaginary part.
cplx dtn_symbol(double xi, double k);

/// Multiplies coefficient j (index j + M_f) by i√(k² − (j − α)²).
VecC dtn_symbol_apply(const VecC& coeffs, double alpha, double k);

/// f = ∂u^i/∂x₂ − T⁺(u^i|Γ_H) at (x₁, H) on the full line. For point sources
/// this returns 0: after the Green's-function split the top data vanish and
/// the incidence enters through floor Dirichlet data instead.
cplx boundary_data_f(const IncidentField& field, double H, double x1);

/// F(α_q, x₁) = Σ_{|j|≤K} f(x₁ + 2πj) e^{2πijα_q} for x₁ in the cell.
cplx boundary_data_bloch(const IncidentField& field, double H,
                         const AlphaGrid& grid, int q, double x1);

/// G(x, y) = Φ_k(x, y) − Φ_k(x, y*) with y* the mirror of y about x₂ = c.
class GreensSplit {
 public:
  /// Throws InputError unless y₂ > c.
  GreensSplit(double wavenumber, Point source, double reference_height);

  Point source() const { return y_; }
  Point image() const { return image_; }
  /// G(x, y).
  cplx value(Point x) const;
  /// The image term Φ_k(x, y*) and its gradient.
  FieldSample image_term(Point x) const;

 private:
  FundamentalSolution phi_;
  Point y_;
  Point image_;
};

GreensSplit greens_split_point_source(double wavenumber, Point y,
                                      double reference_height);

}  // namespace perisurf
