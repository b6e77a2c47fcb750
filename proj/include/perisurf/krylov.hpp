#pragma once

#include <functional>

#include "perisurf/types.hpp"

namespace perisurf {

struct KrylovResult {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Restarted GMRES for a complex linear operator, zero initial guess.
KrylovResult gmres(const std::function<VecC(const VecC&)>& apply, const VecC& rhs,
                   VecC& x, double tolerance, int max_iterations, int restart = 60);

}  // namespace perisurf
