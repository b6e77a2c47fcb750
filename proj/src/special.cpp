#include "perisurf/special.hpp"

#include <cmath>
#include <sstream>

#include "perisurf/errors.hpp"

namespace perisurf {

namespace {

constexpr double kEulerGamma = 0.57721566490153286061;
constexpr double kSeriesLimit = 12.0;

// J0, J1, Y0, Y1 by their ascending series.
void series_01(double x, double& j0, double& j1, double& y0, double& y1) {
  const double half = 0.5 * x;
  const double q = -half * half;
  // term_k = (−x²/4)^k / (k!)²  and  term1_k = (x/2)(−x²/4)^k / (k!(k+1)!)
  double t0 = 1.0;
  double t1 = half;
  double harmonic = 0.0;  // H_k
  j0 = t0;
  j1 = t1;
  double s0 = 0.0;                  // Σ_{k≥1} (−1)^{k+1} H_k (x/2)^{2k}/(k!)²
  double s1 = t1 * (0.0 + 1.0);     // Σ_k (−1)^k (H_k + H_{k+1}) (x/2)^{2k+1}/(k!(k+1)!)
  for (int k = 1; k < 200; ++k) {
    t0 *= q / (static_cast<double>(k) * k);
    t1 *= q / (static_cast<double>(k) * (k + 1));
    harmonic += 1.0 / k;
    const double next_harmonic = harmonic + 1.0 / (k + 1);
    j0 += t0;
    j1 += t1;
    s0 -= t0 * harmonic;
    s1 += t1 * (harmonic + next_harmonic);
    if (std::abs(t0) < 1e-18 * std::abs(j0) + 1e-300 &&
        std::abs(t1) < 1e-18 && std::abs(t0 * harmonic) < 1e-18) {
      break;
    }
  }
  const double lg = std::log(half) + kEulerGamma;
  y0 = (2.0 / kPi) * (lg * j0 + s0);
  // ψ(k+1) + ψ(k+2) = H_k + H_{k+1} − 2γ
  y1 = (2.0 / kPi) * std::log(half) * j1 - 2.0 / (kPi * x) -
       (1.0 / kPi) * (s1 - 2.0 * kEulerGamma * j1);
}

// Hankel asymptotic expansion: J = A(P cos χ − Q sin χ), Y = A(P sin χ + Q cos χ).
void asymptotic(int order, double x, double& j, double& y) {
  const double mu = 4.0 * order * order;
  double p = 1.0;
  double qq = 0.0;
  double term = 1.0;
  double last = 1.0;
  for (int k = 1; k < 60; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= (mu - odd * odd) / (k * 8.0 * x);
    if (std::abs(term) > std::abs(last)) break;
    last = term;
    switch (k % 4) {
      case 1: qq += term; break;
      case 2: p -= term; break;
      case 3: qq -= term; break;
      case 0: p += term; break;
    }
    if (std::abs(term) < 1e-17) break;
  }
  const double chi = x - (0.5 * order + 0.25) * kPi;
  const double amp = std::sqrt(2.0 / (kPi * x));
  const double c = std::cos(chi);
  const double s = std::sin(chi);
  j = amp * (p * c - qq * s);
  y = amp * (p * s + qq * c);
}

}  // namespace

BesselPair bessel_jy(int order, double x) {
  if (!(x > 0.0)) {
    std::ostringstream os;
    os << "Bessel functions require a positive argument, got " << x;
    throw DomainError(os.str());
  }
  if (order != 0 && order != 1) throw DomainError("only orders 0 and 1 are supported");
  BesselPair out;
  if (x <= kSeriesLimit) {
    double j0, j1, y0, y1;
    series_01(x, j0, j1, y0, y1);
    out = order == 0 ? BesselPair{j0, y0} : BesselPair{j1, y1};
  } else {
    asymptotic(order, x, out.j, out.y);
  }
  return out;
}

cplx hankel1(int order, double x) {
  const BesselPair b = bessel_jy(order, x);
  return {b.j, b.y};
}

void hankel1_01(double x, cplx& h0, cplx& h1) {
  if (!(x > 0.0)) throw DomainError("Hankel functions require a positive argument");
  if (x <= kSeriesLimit) {
    double j0, j1, y0, y1;
    series_01(x, j0, j1, y0, y1);
    h0 = {j0, y0};
    h1 = {j1, y1};
    return;
  }
  double j, y;
  asymptotic(0, x, j, y);
  h0 = {j, y};
  asymptotic(1, x, j, y);
  h1 = {j, y};
}

void gauss_legendre(int n, double a, double b, VecR& nodes, VecR& weights) {
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = 0.0;
      for (int m = 1; m <= n; ++m) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * m - 1.0) * z * p1 - (m - 1.0) * p2) / m;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    nodes[i] = 0.5 * (a + b) - 0.5 * (b - a) * z;
    nodes[n - 1 - i] = 0.5 * (a + b) + 0.5 * (b - a) * z;
    weights[i] = weights[n - 1 - i] = 0.5 * (b - a) * w;
  }
}

}  // namespace perisurf
