#include <doctest.h>

#include <cmath>
#include <random>

#include "perisurf/errors.hpp"
#include "perisurf/surface.hpp"

using namespace perisurf;

namespace {

PeriodicProfile zeta1() {
  VecR c = VecR::Zero(9);
  c[0] = 1.5;
  c[2] = 1.0 / 24.0;
  c[3] = -1.0 / 16.0;
  return PeriodicProfile(c);
}

PeriodicProfile zeta2() {
  VecR c = VecR::Zero(9);
  c[0] = 1.5;
  c[1] = 1.0 / 8.0;
  return PeriodicProfile(c);
}

SurfaceModel example1() {
  return SurfaceModel(zeta1(), PerturbationProfile::analytic(PerturbationShape::kExample1, -3),
                      1.15, 3.0, 2.93);
}

SurfaceModel example2() {
  return SurfaceModel(zeta2(), PerturbationProfile::analytic(PerturbationShape::kExample2, 2),
                      1.15, 3.0, 2.93);
}

}  // namespace

TEST_CASE("surface heights of the reference examples") {
  // p1 is centred at −6π, so evaluate ζ1 + p1 in cell −3
  const SurfaceModel m1 = example1();
  CHECK(eval_surface(m1, 0.0) == doctest::Approx(1.5 - 1.0 / 16.0).epsilon(1e-15));
  CHECK(m1.perturbation().value(3.0 - 6.0 * kPi) == doctest::Approx(0.0));
  CHECK(m1.perturbation().value(-3.0 - 6.0 * kPi) == doctest::Approx(0.0));

  const SurfaceModel m2 = example2();
  CHECK(eval_surface(m2, 4.0 * kPi) == doctest::Approx(1.375).epsilon(1e-14));
  // outside the perturbed cell the surface is periodic
  for (double t : {-2.0, 0.3, 1.7, 20.0}) {
    CHECK(std::abs(eval_surface(m2, t + kTwoPi) - eval_surface(m2, t)) < 1e-14);
  }
}

TEST_CASE("bump basis has compact support inside the cell") {
  const int n = 12;
  for (int k = 0; k < n; ++k) {
    const double w = PerturbationProfile::bump_width(n);
    const double c = PerturbationProfile::bump_center(k, n);
    CHECK(c - w >= -kPi - 1e-12);
    CHECK(c + w <= kPi + 1e-12);
    CHECK(PerturbationProfile::bump(k, n, c) == doctest::Approx(1.0));
    CHECK(PerturbationProfile::bump(k, n, c + w) == 0.0);
  }
  const PerturbationProfile p = PerturbationProfile::bumps(VecR::Ones(n), 1);
  CHECK(p.value(0.0) == 0.0);
  CHECK(p.value(kTwoPi) != 0.0);
}

TEST_CASE("flatten map sends the floor to the surface") {
  const SurfaceModel m = example1();
  for (double t : {-6.0 * kPi, -6.0 * kPi + 1.0, 0.2, 2.5}) {
    const Point y = flatten_map(m, ProfileChoice::kPerturbed, {t, m.floor()});
    CHECK(std::abs(y.x2 - eval_surface(m, t)) < 1e-12);
  }
  const Point top = flatten_map(m, ProfileChoice::kPerturbed, {0.4, m.flattening_height()});
  CHECK(top.x2 == m.flattening_height());
}

TEST_CASE("coefficient fields match finite differences of the map") {
  const SurfaceModel m = example2();
  const auto fields = coefficient_fields(m, ProfileChoice::kPerturbed);
  std::mt19937 gen(7);
  std::uniform_real_distribution<double> ux(-kPi, 5.0 * kPi), uy(1.2, 2.9);
  for (int trial = 0; trial < 20; ++trial) {
    const Point x{ux(gen), uy(gen)};
    const double d = 1e-6;
    auto phi = [&](double a, double b) { return flatten_map(m, ProfileChoice::kPerturbed, {a, b}); };
    const double j21 = (phi(x.x1 + d, x.x2).x2 - phi(x.x1 - d, x.x2).x2) / (2 * d);
    const double j22 = (phi(x.x1, x.x2 + d).x2 - phi(x.x1, x.x2 - d).x2) / (2 * d);
    const CoefficientSample s = fields.at(x);
    CHECK(s.c == doctest::Approx(j22).epsilon(1e-6));
    CHECK(s.a11 == doctest::Approx(j22).epsilon(1e-6));
    CHECK(s.a12 == doctest::Approx(-j21).epsilon(1e-6));
    CHECK(s.a22 == doctest::Approx((1 + j21 * j21) / j22).epsilon(1e-6));
  }
  const CoefficientSample above = fields.at({0.1, 2.95});
  CHECK(above.a11 == 1.0);
  CHECK(above.a12 == 0.0);
  CHECK(above.c == 1.0);
}

TEST_CASE("coupling fields vanish outside the perturbed cell") {
  const SurfaceModel m = example2();
  const auto fp = coefficient_fields(m, ProfileChoice::kPerturbed);
  const auto f0 = coefficient_fields(m, ProfileChoice::kPeriodic);
  for (double t : {0.0, 2.0 * kPi + 3.2, 6.0 * kPi}) {
    CHECK(fp.at({t, 1.5}).a22 == f0.at({t, 1.5}).a22);
  }
  CHECK(fp.at({4.0 * kPi, 1.5}).a22 != f0.at({4.0 * kPi, 1.5}).a22);
}

TEST_CASE("invalid strips are rejected") {
  CHECK_THROWS_AS(SurfaceModel(zeta1(), PerturbationProfile::zero(), 1.45, 3.0, 2.9),
                  DegenerateMap);
  CHECK_THROWS_AS(SurfaceModel(zeta1(), PerturbationProfile::zero(), 1.0, 3.0, 3.1),
                  DegenerateMap);
  // a surface too close to H0 folds the cubic blend
  const SurfaceModel low(zeta1(), PerturbationProfile::zero(), 0.0, 3.0, 1.7);
  CHECK_THROWS_AS(coefficient_fields(low, ProfileChoice::kPeriodic).at({0.0, 0.0}),
                  DegenerateMap);
}

TEST_CASE("translation moves the perturbation to cell zero") {
  const SurfaceModel m = example2();
  const SurfaceModel t = translate_model(m, 2);
  CHECK(t.perturbation().cell_index() == 0);
  CHECK(t.perturbation().value(-2.99) != 0.0);
  CHECK(t.perturbation().value(3.01) == 0.0);
  const SurfaceModel m1 = example1();
  const SurfaceModel t1 = translate_model(m1, -3);
  for (double x : {-3.0, -1.0, 0.5, 2.9, 7.0}) {
    CHECK(std::abs(eval_surface(t1, x) - eval_surface(m1, x - 6.0 * kPi)) < 1e-12);
  }
  CHECK(translate_model(m, 0).periodic().coeffs() == m.periodic().coeffs());
  const PeriodicProfile shifted = zeta1().shifted(0.7);
  for (double x : {-1.0, 0.0, 2.0}) {
    CHECK(std::abs(shifted.value(x) - zeta1().value(x + 0.7)) < 1e-14);
  }
  const PeriodicProfile flat = PeriodicProfile::constant(1.5, 5);
  CHECK(flat.shifted(1.234).coeffs() == flat.coeffs());
}
