#pragma once

#include "perisurf/types.hpp"

namespace perisurf {

struct BesselPair {
  double j = 0.0;  // J_n(x)
  double y = 0.0;  // Y_n(x)
};

/// J_n and Y_n for n ∈ {0, 1}, x > 0. Power series up to x = 12, Hankel
/// asymptotic expansion beyond. Throws DomainError for x ≤ 0 or other orders.
BesselPair bessel_jy(int order, double x);

/// H_n^{(1)}(x) = J_n(x) + i Y_n(x).
cplx hankel1(int order, double x);

/// Both H_0^{(1)} and H_1^{(1)} at once (shares the argument reduction).
void hankel1_01(double x, cplx& h0, cplx& h1);

/// Gauss–Legendre nodes and weights on [a, b].
void gauss_legendre(int n, double a, double b, VecR& nodes, VecR& weights);

}  // namespace perisurf
