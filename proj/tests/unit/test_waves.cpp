#include <doctest.h>

#include <cmath>
#include <random>

#include "perisurf/errors.hpp"
#include "perisurf/special.hpp"
#include "perisurf/waves.hpp"

using namespace perisurf;

TEST_CASE("incident field reference values") {
  const IncidentField pw = IncidentField::plane_wave(3.0, kPi / 6);
  CHECK(std::abs(eval_incident(pw, {0, 0}).value - 1.0) < 1e-15);

  const IncidentField hg = IncidentField::herglotz(3.0);
  const cplx v = eval_incident(hg, {0, 0}).value;
  CHECK(v.real() == doctest::Approx(0.340992340992340992).epsilon(1e-13));
  CHECK(std::abs(v.imag()) < 1e-15);

  const IncidentField ps = IncidentField::point_source(2.0, {0.0, 3.0});
  const cplx phi = eval_incident(ps, {0.5, 3.0}).value;
  CHECK(phi.real() == doctest::Approx(-0.0220642410539192395).epsilon(1e-10));
  CHECK(phi.imag() == doctest::Approx(0.191299421639491638).epsilon(1e-10));
  CHECK_THROWS_AS(eval_incident(ps, {0.0, 3.0}), SingularPoint);
}

TEST_CASE("incident fields solve Helmholtz and gradients agree") {
  const double k = 3.0;
  std::vector<IncidentField> fields = {
      IncidentField::plane_wave(k, 0.4), IncidentField::plane_wave(k, -0.3, true),
      IncidentField::point_source(k, {0.3, 3.5}), IncidentField::herglotz(k, {}, 8 * kPi)};
  std::mt19937 gen(3);
  std::uniform_real_distribution<double> ux(-5, 5), uy(1.6, 3.0);
  for (const auto& f : fields) {
    for (int t = 0; t < 5; ++t) {
      const Point x{ux(gen), uy(gen)};
      const double d = 1e-3;
      auto u = [&](double a, double b) { return eval_incident(f, {a, b}).value; };
      const cplx c = u(x.x1, x.x2);
      const cplx lap = (u(x.x1 + d, x.x2) + u(x.x1 - d, x.x2) + u(x.x1, x.x2 + d) +
                        u(x.x1, x.x2 - d) - 4.0 * c) / (d * d);
      CHECK(std::abs(lap + k * k * c) < 1e-4 * k * k * std::max(std::abs(c), 1e-3));
      const double e = 1e-6;
      const FieldSample s = eval_incident(f, x);
      const cplx g1 = (u(x.x1 + e, x.x2) - u(x.x1 - e, x.x2)) / (2 * e);
      const cplx g2 = (u(x.x1, x.x2 + e) - u(x.x1, x.x2 - e)) / (2 * e);
      CHECK(std::abs(s.d1 - g1) < 1e-6 * std::max(1.0, std::abs(g1)));
      CHECK(std::abs(s.d2 - g2) < 1e-6 * std::max(1.0, std::abs(g2)));
    }
  }
}

TEST_CASE("DtN symbol branch") {
  CHECK(std::abs(dtn_symbol(0.0, 3.0) - cplx(0, 3)) < 1e-15);
  CHECK(std::abs(dtn_symbol(5.0, 3.0) - cplx(-4, 0)) < 1e-15);
  CHECK(std::abs(dtn_symbol(3.0, 3.0)) == 0.0);
  VecC c = VecC::Ones(5);
  const VecC once = dtn_symbol_apply(c, 0.25, 1.0);
  const VecC twice = dtn_symbol_apply(once, 0.25, 1.0);
  for (int j = -2; j <= 2; ++j) {
    const double xi = j - 0.25;
    if (std::abs(xi) > 1.0) CHECK(std::abs(twice[j + 2] - (xi * xi - 1.0)) < 1e-14);
  }
}

TEST_CASE("boundary data f") {
  const double k = 3.0, H = 3.0;
  const IncidentField pw = IncidentField::plane_wave(k, kPi / 6);
  const cplx f = boundary_data_f(pw, H, 0.7);
  const cplx expect = -2.0 * kI * k * std::cos(kPi / 6) * eval_incident(pw, {0.7, H}).value;
  CHECK(std::abs(f - expect) < 1e-14);
  CHECK(boundary_data_f(IncidentField::plane_wave(k, 0.2, true), H, 0.3) == cplx(0.0));

  // Herglotz data equal the quadrature superposition of plane-wave data
  const IncidentField hg = IncidentField::herglotz(k);
  VecR t, w;
  gauss_legendre(64, 0.0, 1.0, t, w);
  cplx sum = 0.0;
  for (int i = 0; i < 64; ++i) {
    sum += w[i] * hg.density(t[i]) * boundary_data_f(IncidentField::plane_wave(k, t[i]), H, 1.3);
  }
  CHECK(std::abs(boundary_data_f(hg, H, 1.3) - sum) < 1e-10);
}

TEST_CASE("Green's split") {
  const GreensSplit g = greens_split_point_source(3.0, {0.0, 3.0}, 1.5);
  CHECK(g.image().x1 == 0.0);
  CHECK(g.image().x2 == 0.0);
  CHECK(std::abs(g.value({2.3, 1.5})) < 1e-15);
  CHECK_THROWS_AS(greens_split_point_source(3.0, {0, 1.0}, 1.5), InputError);
  // |G| ~ |x1|^{-3/2}
  std::vector<double> xs = {50, 100, 200}, ls;
  for (double x : xs) {
    double m = 0;
    for (int i = 0; i < 16; ++i) m = std::max(m, std::abs(g.value({x + 0.2 * i, 2.0})));
    ls.push_back(std::log(m));
  }
  const double slope = (ls[2] - ls[0]) / (std::log(200.0) - std::log(50.0));
  CHECK(slope == doctest::Approx(-1.5).epsilon(0.1));
}
