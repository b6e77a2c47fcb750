#pragma once

#include <functional>
#include <string>
#include <vector>

#include "perisurf/shape_calculus.hpp"

namespace perisurf {

struct CgneConfig {
  int max_iterations = 20;
  /// Stop once ‖M*r‖ ≤ tolerance·‖M*b‖.
  double tolerance = 1e-2;
  /// Stop once ‖r‖ ≤ discrepancy·target (target from the caller, 0 disables).
  double discrepancy = 1.05;
};

enum class CgneStop { kZeroRhs, kTolerance, kDiscrepancy, kIterationCap };

struct CgneResult {
  VecR solution;
  int iterations = 0;
  CgneStop stop = CgneStop::kZeroRhs;
  /// ‖b − M x_i‖ for i = 0, 1, ...
  std::vector<double> residuals;
};

using ForwardMap = std::function<VecC(const VecR&)>;
using AdjointMap = std::function<VecR(const VecC&)>;

/// CG on M*M x = M*b (CGLS form). The trace space carries the weighted inner
/// product Re Σ wᵢ aᵢ b̄ᵢ (empty weights mean unit weights) and M* must be the
/// adjoint for it. Throws Stagnation when a search direction collapses.
CgneResult cgne_solve(const ForwardMap& apply, const AdjointMap& apply_star,
                      const VecC& rhs, int size, const VecR& weights,
                      const CgneConfig& cfg, double target = 0.0);

/// Weighted trace norm.
double trace_norm(const VecC& v, const VecR& weights);

/// kStalled: an accepted step reduced the residual by less than the minimum
/// relative decrease, i.e. the fit has reached the noise level.
enum class NewtonStatus { kConverged, kStalled, kMaxOuterIterations, kStepControlFailed };
const char* status_name(NewtonStatus s);

struct IterationRecord {
  int iteration = 0;
  double residual = 0.0;  // relative, after the step
  double step_norm = 0.0;
  int inner_iterations = 0;
  int halvings = 0;
};

struct NewtonConfig {
  double epsilon = 0.06;
  int max_outer = 25;
  int max_halvings = 5;
  /// Stop after an accepted step with (r_old − r_new)/r_old below this.
  double min_decrease = 0.02;
  /// Relative noise level σ; CGNE stops at discrepancy·σ‖U‖.
  double noise_level = 0.0;
  CgneConfig cgne;
  /// Called after every accepted step with the record and the new iterate.
  std::function<void(const IterationRecord&, const VecR&)> observer;
};

struct StageResult {
  NewtonStatus status = NewtonStatus::kConverged;
  VecR coeffs;
  double initial_residual = 0.0;  // relative
  double final_residual = 0.0;    // relative
  std::vector<IterationRecord> history;
};

/// Discretization the inversion uses for P(C, D): the perturbation lives in
/// cell 0 and the strip, mesh and measurement line stay fixed.
struct InversionModel {
  double wavenumber = 3.0;
  double floor = 1.15;
  double ceiling = 3.0;
  double flattening_height = 2.93;
  int periodic_size = 9;  // M
  int bump_size = 12;     // N
  ForwardSettings settings;
  MeasurementLine line;

  SurfaceModel surface(const VecR& C, const VecR& D) const;
  std::shared_ptr<const PeriodicSystem> system(const VecR& C) const;
};

/// Newton-CG over the periodic coefficients C with D fixed.
StageResult newton_part1(const InversionModel& model, const IncidentField& incident,
                         const VecC& data, const VecR& C0, const VecR& D,
                         const NewtonConfig& cfg);

/// Newton-CG over the bump coefficients D with C fixed.
StageResult newton_part2(const InversionModel& model, const IncidentField& incident,
                         const VecC& data, const VecR& C, const VecR& D0,
                         const NewtonConfig& cfg);

}  // namespace perisurf
