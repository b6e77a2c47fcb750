#include <doctest.h>

#include <memory>
#include <random>

#include "perisurf/shape_calculus.hpp"

using namespace perisurf;

namespace {

struct Fixture {
  double k = 3.0;
  int K = 3;
  int n = 12;
  ForwardSettings st;
  MeasurementLine line{2 * kPi, 48, 3.0};
  std::unique_ptr<ScatterOperatorContext> ctx;

  Fixture() {
    VecR c = VecR::Zero(4);
    c << 1.5, 0.0, 1.0 / 24, -1.0 / 16;
    const SurfaceModel m(PeriodicProfile(c),
                         PerturbationProfile::analytic(PerturbationShape::kExample1, 0), 1.15, 3.0,
                         2.93);
    st.truncation = K;
    st.n1 = n;
    st.n2 = n / 2;
    st.fourier_modes = 16;
    auto sys = std::make_shared<const PeriodicSystem>(
        m, k, CellMesh(n, n / 2, 2, 1.15, 3.0), AlphaGrid::avoiding_anomalies(K, k), 16);
    ctx = std::make_unique<ScatterOperatorContext>(sys, m, IncidentField::herglotz(k), line, st);
  }

  SurfaceSamples direction(unsigned seed) const {
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> u(-1, 1);
    const double a = u(gen), b = u(gen), c = u(gen);
    return ctx->sample([&](double t) { return a + b * std::cos(t) + c * std::sin(2 * t); });
  }

  VecC trace(unsigned seed) const {
    std::mt19937 gen(seed);
    std::normal_distribution<double> g;
    VecC phi(line.size());
    for (auto& v : phi) v = cplx(g(gen), g(gen));
    return phi;
  }
};

}  // namespace

TEST_CASE("derivative and adjoint vanish on zero input") {
  const Fixture f;
  const SurfaceSamples zero = f.ctx->sample([](double) { return 0.0; });
  CHECK(apply_DS(*f.ctx, zero).norm() == 0.0);
  const SurfaceSamples z = apply_DS_star(*f.ctx, VecC::Zero(f.line.size()));
  for (const VecR& v : z) CHECK(v.norm() == 0.0);
  CHECK(apply_MA_star(*f.ctx, VecC::Zero(f.line.size()), 5).norm() == 0.0);
  CHECK(apply_MB_star(*f.ctx, VecC::Zero(f.line.size()), 6).norm() == 0.0);
}

TEST_CASE("S is deterministic") {
  const Fixture f;
  const VecC a = apply_S(*f.ctx);
  const Fixture g;
  CHECK(a == apply_S(*g.ctx));
}

TEST_CASE("DS is linear") {
  const Fixture f;
  SurfaceSamples h = f.direction(1), h2 = h;
  for (VecR& v : h2) v *= 2.0;
  const VecC a = apply_DS(*f.ctx, h), b = apply_DS(*f.ctx, h2);
  CHECK((b - 2.0 * a).norm() < 1e-12 * b.norm());
}

TEST_CASE("coefficient maps expand the basis") {
  const Fixture f;
  VecR e1 = VecR::Zero(5);
  e1[0] = 1.0;
  const VecC ma = apply_MA(*f.ctx, e1);
  const VecC ds = apply_DS(*f.ctx, f.ctx->sample([](double) { return 1.0; }));
  CHECK((ma - ds).norm() < 1e-12 * ds.norm());

  VecR dc(5), dd(6);
  dc << 0.3, -0.2, 0.1, 0.05, 0.0;
  dd << 0.0, 0.2, -0.1, 0.3, 0.1, 0.0;
  SurfaceSamples h = periodic_direction(*f.ctx, dc);
  const SurfaceSamples hb = perturbation_direction(*f.ctx, dd);
  for (size_t j = 0; j < h.size(); ++j) h[j] += hb[j];
  const VecC sum = apply_MA(*f.ctx, dc) + apply_MB(*f.ctx, dd);
  const VecC combined = apply_DS(*f.ctx, h);
  CHECK((sum - combined).norm() < 1e-10 * combined.norm());
}

TEST_CASE("adjoint pairings of DS, M_A and M_B") {
  const Fixture f;
  for (unsigned s = 0; s < 3; ++s) {
    const SurfaceSamples h = f.direction(10 + s);
    const VecC phi = f.trace(20 + s);
    const double lhs = f.ctx->trace_inner(apply_DS(*f.ctx, h), phi).real();
    const double rhs = f.ctx->surface_inner(h, apply_DS_star(*f.ctx, phi));
    CHECK(std::abs(lhs - rhs) < 1e-6 * std::abs(lhs));

    VecR dc = VecR::LinSpaced(7, 0.3, -0.2);
    dc[s] += 0.5;
    const double a = f.ctx->trace_inner(apply_MA(*f.ctx, dc), phi).real();
    const double b = dc.dot(apply_MA_star(*f.ctx, phi, 7));
    CHECK(std::abs(a - b) < 1e-6 * std::abs(a));

    VecR dd = VecR::LinSpaced(8, -0.1, 0.2);
    dd[s + 2] -= 0.4;
    const double c = f.ctx->trace_inner(apply_MB(*f.ctx, dd), phi).real();
    const double d = dd.dot(apply_MB_star(*f.ctx, phi, 8));
    CHECK(std::abs(c - d) < 1e-6 * std::abs(c));
  }
}

TEST_CASE("surface quadrature integrates the basis") {
  const Fixture f;
  // ⟨φ_m, 1⟩ over the truncated strip: 2π(2K+1) for m = 0, zero otherwise
  const SurfaceSamples one = f.ctx->sample([](double) { return 1.0; });
  for (int m = 0; m < 5; ++m) {
    const SurfaceSamples phi = f.ctx->sample([&](double t) { return PeriodicProfile::basis(m, t); });
    const double v = f.ctx->surface_inner(phi, one);
    CHECK(v == doctest::Approx(m == 0 ? kTwoPi * (2 * f.K + 1) : 0.0).epsilon(1e-10).scale(1.0));
  }
}
