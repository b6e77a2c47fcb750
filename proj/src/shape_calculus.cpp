#include "perisurf/shape_calculus.hpp"

#include "perisurf/errors.hpp"

namespace perisurf {

namespace {

VecR floor_node_weights(const CellMesh& mesh) {
  const double dx = mesh.element_width();
  VecR w(mesh.nx());
  if (mesh.order() == 1) {
    w.setConstant(dx);
  } else {
    for (int c = 0; c < mesh.nx(); ++c) w[c] = (c % 2 == 0) ? dx / 3.0 : 2.0 * dx / 3.0;
  }
  return w;
}

}  // namespace

ScatterOperatorContext::ScatterOperatorContext(std::shared_ptr<const PeriodicSystem> system,
                                               const SurfaceModel& surface,
                                               const IncidentField& incident,
                                               const MeasurementLine& line,
                                               const ForwardSettings& settings)
    : problem_(std::move(system), surface, settings),
      incident_(incident),
      line_(line),
      weights_(line.weights()) {
  if (incident.kind == IncidentKind::kPointSource) {
    throw InputError("shape derivatives are implemented for plane-wave and Herglotz incidence");
  }
  const BlochField w = problem_.solve(incident_);
  scattered_ = problem_.scattered_trace(w, incident_, line_).values;

  const PeriodicSystem& sys = problem_.system();
  const CellMesh& mesh = sys.mesh();
  const int K = sys.grid().truncation();
  gradient_ = floor_gradients(sys, w);
  const double h = mesh.floor();
  const double H0 = surface.flattening_height();
  for (int j = -K; j <= K; ++j) {
    for (int c = 0; c < mesh.nx(); ++c) {
      const double t = mesh.x1(c) + kTwoPi * j;
      // det ∇Φ on the floor
      const double b = 1.0 + 3.0 * (surface.height(t) - h) / (h - H0);
      gradient_[j + K][c] /= b;
    }
  }
  omega_ = floor_node_weights(mesh);
}

double ScatterOperatorContext::surface_inner(const SurfaceSamples& a,
                                             const SurfaceSamples& b) const {
  double s = 0.0;
  for (size_t j = 0; j < a.size(); ++j) s += (omega_.array() * a[j].array() * b[j].array()).sum();
  return s;
}

cplx ScatterOperatorContext::trace_inner(const VecC& a, const VecC& b) const {
  cplx s = 0.0;
  for (int i = 0; i < a.size(); ++i) s += weights_[i] * a[i] * std::conj(b[i]);
  return s;
}

VecC apply_S(const ScatterOperatorContext& ctx) { return ctx.scattered(); }

VecC apply_DS(const ScatterOperatorContext& ctx, const SurfaceSamples& h,
              SolveStats* stats) {
  const PeriodicSystem& sys = ctx.system();
  const auto& d = ctx.surface_gradient();
  if (h.size() != d.size()) throw MeshMismatch("direction does not cover the truncated strip");
  std::vector<VecC> g(d.size());
  for (size_t j = 0; j < d.size(); ++j) g[j] = -(d[j].array() * h[j].cast<cplx>().array()).matrix();
  BlochLoad load;
  load.floor = bloch_floor_data(sys.grid(), g);
  const BlochField w = solve_perturbed(sys, ctx.problem().coupling(), load,
                                       ctx.problem().settings(), false, stats);
  const TraceSampler sampler(sys.mesh(), sys.grid().truncation(), ctx.line().abscissae());
  return sampler.sample(top_traces(sys, w));
}

SurfaceSamples apply_DS_star(const ScatterOperatorContext& ctx, const VecC& phi,
                             SolveStats* stats) {
  const PeriodicSystem& sys = ctx.system();
  const VecC z = (ctx.measurement_weights().cast<cplx>().array() * phi.array()).matrix();
  const TraceSampler sampler(sys.mesh(), sys.grid().truncation(), ctx.line().abscissae());
  const std::vector<VecC> tops = top_traces_adjoint(sys, sampler.adjoint(z));
  BlochLoad load;
  load.interior.resize(tops.size());
  for (size_t q = 0; q < tops.size(); ++q) load.interior[q] = embed_top(sys, tops[q]);
  const BlochField x = solve_perturbed(sys, ctx.problem().coupling(), load,
                                       ctx.problem().settings(), true, stats);
  const std::vector<VecC> r =
      bloch_floor_data_adjoint(sys.grid(), floor_data_adjoint(sys, ctx.problem().coupling(), x));
  const auto& d = ctx.surface_gradient();
  const VecR& omega = ctx.surface_weights();
  SurfaceSamples out(r.size());
  for (size_t j = 0; j < r.size(); ++j) {
    out[j] = -(d[j].array() * r[j].conjugate().array()).real() / omega.array();
  }
  return out;
}

SurfaceSamples periodic_direction(const ScatterOperatorContext& ctx, const VecR& dc) {
  return ctx.sample([&](double t) {
    double v = 0.0;
    for (int m = 0; m < dc.size(); ++m) v += dc[m] * PeriodicProfile::basis(m, t);
    return v;
  });
}

SurfaceSamples perturbation_direction(const ScatterOperatorContext& ctx, const VecR& dd) {
  const PerturbationProfile p = PerturbationProfile::bumps(dd, ctx.surface().perturbation().cell_index());
  return ctx.sample([&](double t) { return p.value(t); });
}

VecC apply_MA(const ScatterOperatorContext& ctx, const VecR& dc) {
  return apply_DS(ctx, periodic_direction(ctx, dc));
}

VecC apply_MB(const ScatterOperatorContext& ctx, const VecR& dd) {
  return apply_DS(ctx, perturbation_direction(ctx, dd));
}

VecR apply_MA_star(const ScatterOperatorContext& ctx, const VecC& phi, int size) {
  const SurfaceSamples q = apply_DS_star(ctx, phi);
  VecR out(size);
  for (int m = 0; m < size; ++m) {
    VecR e = VecR::Zero(size);
    e[m] = 1.0;
    out[m] = ctx.surface_inner(periodic_direction(ctx, e), q);
  }
  return out;
}

VecR apply_MB_star(const ScatterOperatorContext& ctx, const VecC& phi, int size) {
  const SurfaceSamples q = apply_DS_star(ctx, phi);
  VecR out(size);
  for (int n = 0; n < size; ++n) {
    VecR e = VecR::Zero(size);
    e[n] = 1.0;
    out[n] = ctx.surface_inner(perturbation_direction(ctx, e), q);
  }
  return out;
}

}  // namespace perisurf
