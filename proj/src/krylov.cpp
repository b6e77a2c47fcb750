#include "perisurf/krylov.hpp"

#include <cmath>
#include <vector>

namespace perisurf {

KrylovResult gmres(const std::function<VecC(const VecC&)>& apply, const VecC& rhs,
                   VecC& x, double tolerance, int max_iterations, int restart) {
  KrylovResult result;
  const Eigen::Index n = rhs.size();
  x = VecC::Zero(n);
  const double bnorm = rhs.norm();
  if (bnorm == 0.0) {
    result.converged = true;
    return result;
  }
  VecC r = rhs;
  double rnorm = bnorm;
  while (result.iterations < max_iterations) {
    const int m = std::min(restart, max_iterations - result.iterations);
    std::vector<VecC> V;
    V.reserve(m + 1);
    V.push_back(r / rnorm);
    Eigen::MatrixXcd Hm = Eigen::MatrixXcd::Zero(m + 1, m);
    std::vector<cplx> cs(m), sn(m);
    VecC g = VecC::Zero(m + 1);
    g[0] = rnorm;
    int k = 0;
    for (; k < m; ++k) {
      VecC w = apply(V[k]);
      // modified Gram-Schmidt, twice for stability
      for (int pass = 0; pass < 2; ++pass) {
        for (int i = 0; i <= k; ++i) {
          const cplx hij = V[i].dot(w);
          Hm(i, k) += hij;
          w -= hij * V[i];
        }
      }
      const double hnext = w.norm();
      Hm(k + 1, k) = hnext;
      for (int i = 0; i < k; ++i) {
        const cplx t = cs[i] * Hm(i, k) + sn[i] * Hm(i + 1, k);
        Hm(i + 1, k) = -std::conj(sn[i]) * Hm(i, k) + std::conj(cs[i]) * Hm(i + 1, k);
        Hm(i, k) = t;
      }
      const cplx a = Hm(k, k);
      const double b = std::abs(Hm(k + 1, k));
      const double den = std::hypot(std::abs(a), b);
      if (den == 0.0) {
        cs[k] = 1.0;
        sn[k] = 0.0;
      } else {
        const cplx phase = std::abs(a) == 0.0 ? cplx(1.0) : a / std::abs(a);
        cs[k] = std::abs(a) / den;
        sn[k] = phase * std::conj(Hm(k + 1, k)) / den;
      }
      Hm(k, k) = cs[k] * a + sn[k] * Hm(k + 1, k);
      Hm(k + 1, k) = 0.0;
      g[k + 1] = -std::conj(sn[k]) * g[k];
      g[k] = cs[k] * g[k];
      ++result.iterations;
      if (std::abs(g[k + 1]) <= tolerance * bnorm || hnext == 0.0) {
        ++k;
        break;
      }
      V.push_back(w / hnext);
    }
    VecC y = VecC::Zero(k);
    for (int i = k - 1; i >= 0; --i) {
      cplx s = g[i];
      for (int j = i + 1; j < k; ++j) s -= Hm(i, j) * y[j];
      y[i] = s / Hm(i, i);
    }
    for (int i = 0; i < k; ++i) x += y[i] * V[i];
    r = rhs - apply(x);
    rnorm = r.norm();
    result.relative_residual = rnorm / bnorm;
    if (result.relative_residual <= tolerance * 1.0001) {
      result.converged = true;
      return result;
    }
  }
  return result;
}

}  // namespace perisurf
