#include "perisurf/inversion.hpp"

#include <cmath>
#include <memory>

#include "perisurf/errors.hpp"

namespace perisurf {

namespace {

double weighted_dot(const VecC& a, const VecC& b, const VecR& w) {
  double s = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    const double wi = w.size() == 0 ? 1.0 : w[i];
    s += wi * (a[i].real() * b[i].real() + a[i].imag() * b[i].imag());
  }
  return s;
}

}  // namespace

double trace_norm(const VecC& v, const VecR& weights) {
  return std::sqrt(weighted_dot(v, v, weights));
}

CgneResult cgne_solve(const ForwardMap& apply, const AdjointMap& apply_star,
                      const VecC& rhs, int size, const VecR& weights,
                      const CgneConfig& cfg, double target) {
  if (cfg.max_iterations < 1 || cfg.tolerance <= 0.0 || cfg.discrepancy <= 0.0) {
    throw InputError("CGNE settings must be positive");
  }
  if (weights.size() != 0 && weights.size() != rhs.size()) {
    throw InputError("CGNE weights do not match the right-hand side");
  }
  CgneResult out;
  out.solution = VecR::Zero(size);
  VecC r = rhs;
  double rnorm = trace_norm(r, weights);
  out.residuals.push_back(rnorm);
  if (rnorm == 0.0) return out;

  VecR s = apply_star(r);
  if (s.size() != size) throw InputError("adjoint map returned the wrong size");
  const double s0 = s.norm();
  if (s0 == 0.0) return out;
  VecR p = s;
  double gamma = s0 * s0;

  const double stop_at = target > 0.0 ? cfg.discrepancy * target : 0.0;
  if (rnorm <= stop_at) {
    out.stop = CgneStop::kDiscrepancy;
    return out;
  }
  out.stop = CgneStop::kIterationCap;
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    if (p.norm() < 1e-14 * s0) throw Stagnation("CGNE search direction vanished");
    const VecC q = apply(p);
    const double qq = weighted_dot(q, q, weights);
    if (!(qq > 0.0)) throw Stagnation("CGNE direction lies in the null space");
    const double alpha = gamma / qq;
    out.solution += alpha * p;
    r -= alpha * q;
    rnorm = trace_norm(r, weights);
    out.residuals.push_back(rnorm);
    out.iterations = it;
    s = apply_star(r);
    const double gnew = s.squaredNorm();
    if (rnorm <= stop_at) {
      out.stop = CgneStop::kDiscrepancy;
      break;
    }
    if (std::sqrt(gnew) <= cfg.tolerance * s0) {
      out.stop = CgneStop::kTolerance;
      break;
    }
    p = s + (gnew / gamma) * p;
    gamma = gnew;
  }
  return out;
}

const char* status_name(NewtonStatus s) {
  switch (s) {
    case NewtonStatus::kConverged: return "converged";
    case NewtonStatus::kStalled: return "stalled";
    case NewtonStatus::kMaxOuterIterations: return "max_outer_iterations";
    case NewtonStatus::kStepControlFailed: return "step_control_failed";
  }
  return "unknown";
}

SurfaceModel InversionModel::surface(const VecR& C, const VecR& D) const {
  PerturbationProfile p = D.size() == 0 || D.isZero(0.0)
                              ? PerturbationProfile::zero(bump_size, 0)
                              : PerturbationProfile::bumps(D, 0);
  return SurfaceModel(PeriodicProfile(C), p, floor, ceiling, flattening_height);
}

std::shared_ptr<const PeriodicSystem> InversionModel::system(const VecR& C) const {
  const SurfaceModel m = surface(C, VecR());
  const CellMesh mesh(settings.n1, settings.n2, settings.order, floor, ceiling);
  const AlphaGrid grid = AlphaGrid::avoiding_anomalies(settings.truncation, wavenumber);
  return std::make_shared<PeriodicSystem>(m, wavenumber, mesh, grid, settings.fourier_modes);
}

namespace {

struct Evaluation {
  std::unique_ptr<ScatterOperatorContext> ctx;
  VecC residual;
  double relative = 0.0;
};

using Evaluator = std::function<Evaluation(const VecR&)>;
using LinearizedMaps = std::function<std::pair<ForwardMap, AdjointMap>(const ScatterOperatorContext&)>;

bool numerical_failure(const Error& e) {
  return e.kind() != "InputError" && e.kind() != "MeshMismatch";
}

StageResult newton_loop(const Evaluator& evaluate, const LinearizedMaps& maps,
                        const VecC& data, const VecR& weights, VecR x,
                        const NewtonConfig& cfg) {
  if (cfg.max_outer < 0 || cfg.max_halvings < 0 || cfg.epsilon <= 0.0 ||
      cfg.min_decrease < 0.0 || cfg.noise_level < 0.0) {
    throw InputError("invalid Newton settings");
  }
  const double unorm = trace_norm(data, weights);
  if (unorm == 0.0) throw InputError("measured data vanish");
  StageResult out;

  Evaluation cur = evaluate(x);
  out.initial_residual = cur.relative;
  out.status = NewtonStatus::kMaxOuterIterations;
  for (int it = 1;; ++it) {
    if (cur.relative <= cfg.epsilon) {
      out.status = NewtonStatus::kConverged;
      break;
    }
    if (it > cfg.max_outer) break;
    auto [fwd, adj] = maps(*cur.ctx);
    const CgneResult inner =
        cgne_solve(fwd, adj, cur.residual, static_cast<int>(x.size()), weights, cfg.cgne,
                   cfg.noise_level * unorm);
    VecR step = inner.solution;
    const double previous = cur.relative;
    bool accepted = false;
    int halvings = 0;
    for (; halvings <= cfg.max_halvings; ++halvings) {
      try {
        Evaluation trial = evaluate(x + step);
        if (trial.relative < cur.relative) {
          cur = std::move(trial);
          accepted = true;
          break;
        }
      } catch (const Error& e) {
        if (!numerical_failure(e)) throw;
      }
      step *= 0.5;
    }
    if (!accepted) {
      out.status = NewtonStatus::kStepControlFailed;
      break;
    }
    x += step;
    out.history.push_back({it, cur.relative, step.norm(), inner.iterations, halvings});
    if (cfg.observer) cfg.observer(out.history.back(), x);
    if (previous - cur.relative < cfg.min_decrease * previous && cur.relative > cfg.epsilon) {
      out.status = NewtonStatus::kStalled;
      break;
    }
  }
  out.coeffs = x;
  out.final_residual = cur.relative;
  return out;
}

Evaluation evaluate_at(std::shared_ptr<const PeriodicSystem> system, const SurfaceModel& surface,
                       const IncidentField& incident, const InversionModel& model,
                       const VecC& data) {
  Evaluation e;
  e.ctx = std::make_unique<ScatterOperatorContext>(std::move(system), surface, incident,
                                                   model.line, model.settings);
  e.residual = data - e.ctx->scattered();
  const VecR& w = e.ctx->measurement_weights();
  e.relative = trace_norm(e.residual, w) / trace_norm(data, w);
  return e;
}

void check_data(const InversionModel& model, const VecC& data) {
  if (data.size() != model.line.size()) throw InputError("data do not match the measurement line");
}

}  // namespace

StageResult newton_part1(const InversionModel& model, const IncidentField& incident,
                         const VecC& data, const VecR& C0, const VecR& D,
                         const NewtonConfig& cfg) {
  check_data(model, data);
  if (C0.size() != model.periodic_size) throw InputError("C has the wrong size");
  const VecR w = model.line.weights();
  Evaluator evaluate = [&](const VecR& C) {
    return evaluate_at(model.system(C), model.surface(C, D), incident, model, data);
  };
  LinearizedMaps maps = [&](const ScatterOperatorContext& ctx) {
    const int m = model.periodic_size;
    return std::make_pair(ForwardMap([&ctx](const VecR& dc) { return apply_MA(ctx, dc); }),
                          AdjointMap([&ctx, m](const VecC& r) { return apply_MA_star(ctx, r, m); }));
  };
  return newton_loop(evaluate, maps, data, w, C0, cfg);
}

StageResult newton_part2(const InversionModel& model, const IncidentField& incident,
                         const VecC& data, const VecR& C, const VecR& D0,
                         const NewtonConfig& cfg) {
  check_data(model, data);
  if (D0.size() != model.bump_size) throw InputError("D has the wrong size");
  const VecR w = model.line.weights();
  const auto system = model.system(C);
  Evaluator evaluate = [&](const VecR& D) {
    return evaluate_at(system, model.surface(C, D), incident, model, data);
  };
  LinearizedMaps maps = [&](const ScatterOperatorContext& ctx) {
    const int n = model.bump_size;
    return std::make_pair(ForwardMap([&ctx](const VecR& dd) { return apply_MB(ctx, dd); }),
                          AdjointMap([&ctx, n](const VecC& r) { return apply_MB_star(ctx, r, n); }));
  };
  return newton_loop(evaluate, maps, data, w, D0, cfg);
}

}  // namespace perisurf
