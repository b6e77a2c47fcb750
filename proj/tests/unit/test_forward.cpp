#include <doctest.h>

#include <cmath>
#include <memory>

#include "perisurf/errors.hpp"
#include "perisurf/forward.hpp"

using namespace perisurf;

namespace {

VecR example1_coeffs() {
  VecR c = VecR::Zero(4);
  c << 1.5, 0.0, 1.0 / 24, -1.0 / 16;
  return c;
}

ForwardSettings settings(int K, int n) {
  ForwardSettings st;
  st.truncation = K;
  st.n1 = n;
  st.n2 = n / 2;
  st.fourier_modes = 24;
  return st;
}

double field_norm(const BlochField& w) {
  double s = 0;
  for (const CellField& f : w.fields) s += weighted_norm2(f);
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("flat surface reproduces the image solution in the cell") {
  const double k = 3.0, th = kPi / 6, c = 1.5;
  const SurfaceModel m(PeriodicProfile::constant(c, 1), PerturbationProfile::zero(), 1.15, 3.0,
                       2.93);
  const CellMesh mesh(32, 32, 2, 1.15, 3.0);
  const AlphaGrid grid(0, plane_wave_alpha(k, th));
  auto sys = std::make_shared<const PeriodicSystem>(m, k, mesh, grid, 24);
  const ScatteringProblem prob(sys, m, settings(0, 32));
  const BlochField w = prob.solve(IncidentField::plane_wave(k, th));
  // flattening is the identity above H₀ only, so compare on the rows above it
  double err = 0, nrm = 0;
  for (int r = 0; r < mesh.ny(); ++r) {
    if (mesh.x2(r) < 2.93) continue;
    for (int col = 0; col < mesh.nx(); ++col) {
      const double x1 = mesh.x1(col), x2 = mesh.x2(r);
      const cplx ex = std::polar(1.0, k * (x1 * std::sin(th) - x2 * std::cos(th))) -
                      std::polar(1.0, k * (x1 * std::sin(th) + (x2 - 2 * c) * std::cos(th)));
      err += std::norm(w.fields[0].at(col, r) - ex);
      nrm += std::norm(ex);
    }
  }
  CHECK(std::sqrt(err / nrm) < 1e-2);
}

TEST_CASE("zero incident field gives the zero solution") {
  const SurfaceModel m(PeriodicProfile(example1_coeffs()),
                       PerturbationProfile::analytic(PerturbationShape::kExample1, 0), 1.15, 3.0,
                       2.93);
  const CellMesh mesh(8, 4, 2, 1.15, 3.0);
  auto sys = std::make_shared<const PeriodicSystem>(m, 3.0, mesh, AlphaGrid(2, 0.01), 16);
  BlochLoad load;
  for (int q = 0; q < 5; ++q) load.interior.push_back(VecC::Zero(sys->interior_size()));
  const BlochField w = solve_perturbed(*sys, Coupling(*sys, m), load, settings(2, 8));
  CHECK(field_norm(w) == 0.0);
}

TEST_CASE("without a perturbation the α problems decouple") {
  const double k = 3.0;
  const SurfaceModel m(PeriodicProfile(example1_coeffs()), PerturbationProfile::zero(), 1.15, 3.0,
                       2.93);
  const CellMesh mesh(8, 4, 2, 1.15, 3.0);
  auto sys = std::make_shared<const PeriodicSystem>(m, k, mesh,
                                                    AlphaGrid::avoiding_anomalies(2, k), 16);
  const ScatteringProblem prob(sys, m, settings(2, 8));
  const IncidentField inc = IncidentField::herglotz(k);
  const BlochField w = prob.solve(inc);
  const std::vector<VecC> loads = incident_top_loads(*sys, inc);
  for (int q = 0; q < sys->grid().size(); ++q) {
    const CellField ref = solve_cell_alpha(*sys, q, loads[q]);
    CHECK((w.fields[q].values - ref.values).norm() < 1e-12 * ref.values.norm());
  }
}

TEST_CASE("small perturbations change the solution linearly") {
  const double k = 3.0;
  const SurfaceModel m(PeriodicProfile(example1_coeffs()), PerturbationProfile::zero(), 1.15, 3.0,
                       2.93);
  const CellMesh mesh(12, 6, 2, 1.15, 3.0);
  auto sys = std::make_shared<const PeriodicSystem>(m, k, mesh,
                                                    AlphaGrid::avoiding_anomalies(2, k), 16);
  const IncidentField inc = IncidentField::herglotz(k);
  const ForwardSettings st = settings(2, 12);
  const BlochField w0 = ScatteringProblem(sys, m, st).solve(inc);
  VecR d = VecR::Zero(6);
  d << 0.0, 0.5, 1.0, 0.8, 0.2, 0.0;
  auto change = [&](double eps) {
    const SurfaceModel mp = m.with_perturbation(PerturbationProfile::bumps(eps * d, 0));
    BlochField w = ScatteringProblem(sys, mp, st).solve(inc);
    for (size_t q = 0; q < w.fields.size(); ++q) w.fields[q].values -= w0.fields[q].values;
    return field_norm(w);
  };
  const double a = change(1e-2), b = change(5e-3);
  CHECK(a / b == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("flat-surface scattered trace is one upward mode") {
  const double k = 3.0, th = 0.4;
  const SurfaceModel m(PeriodicProfile::constant(1.5, 1), PerturbationProfile::zero(), 1.15, 3.0,
                       2.93);
  const CellMesh mesh(24, 24, 2, 1.15, 3.0);
  auto sys = std::make_shared<const PeriodicSystem>(
      m, k, mesh, AlphaGrid(0, plane_wave_alpha(k, th)), 24);
  const ScatteringProblem prob(sys, m, settings(0, 24));
  const IncidentField inc = IncidentField::plane_wave(k, th);
  const CauchyData d = prob.scattered_trace(prob.solve(inc), inc, MeasurementLine{3.0, 60, 3.0});
  const VecC expected = cplx(0, k * std::cos(th)) * d.values;
  CHECK((d.normals - expected).norm() < 1e-2 * expected.norm());
}

TEST_CASE("point-source data are reciprocal") {
  const double k = 3.0;
  const SurfaceModel m(PeriodicProfile(example1_coeffs()),
                       PerturbationProfile::analytic(PerturbationShape::kExample1, 0), 1.15, 3.0,
                       2.93);
  const int K = 4, n = 16;
  const CellMesh mesh(n, n / 2, 2, 1.15, 3.0);
  auto sys = std::make_shared<const PeriodicSystem>(m, k, mesh,
                                                    AlphaGrid::avoiding_anomalies(K, k), 24);
  const ScatteringProblem prob(sys, m, settings(K, n));
  const MeasurementLine line{2 * kPi, 24, 3.0};
  const std::vector<double> xs = line.abscissae();
  // sources on Γ_H at two receiver abscissae
  const int a = 10, b = 33;
  auto trace = [&](int src) {
    const IncidentField inc = IncidentField::point_source(k, {xs[src], 3.0});
    return prob.scattered_trace(prob.solve(inc, 1.5), inc, line, 1.5).values;
  };
  const VecC ua = trace(a), ub = trace(b);
  const cplx ab = ua[b], ba = ub[a];
  CHECK(std::abs(ab - ba) < 1e-2 * std::abs(ab));
}

TEST_CASE("measurement line layout") {
  const MeasurementLine line{14 * kPi, 4200, 3.0};
  CHECK(line.size() == 8401);
  CHECK(line.spacing() == doctest::Approx(kPi / 300).epsilon(1e-15));
  const VecR w = line.weights();
  CHECK(w.sum() == doctest::Approx(28 * kPi).epsilon(1e-12));
  CHECK(w[0] == doctest::Approx(0.5 * w[1]));
}

TEST_CASE("invalid discretizations are rejected") {
  CHECK_THROWS_AS(CellMesh(0, 4, 2, 1.15, 3.0), InputError);
  CHECK_THROWS_AS(CellMesh(8, 4, 3, 1.15, 3.0), InputError);
  CHECK_THROWS_AS(CellMesh(8, 4, 2, 3.0, 1.15), InputError);
}
