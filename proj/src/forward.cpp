#include "perisurf/forward.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "perisurf/errors.hpp"
#include "perisurf/krylov.hpp"
#include "perisurf/parallel.hpp"

namespace perisurf {

namespace {

using Triplet = Eigen::Triplet<double>;
using TripletC = Eigen::Triplet<cplx>;

// Local element matrix of the volume form at element (ex, ey).
void element_matrix(const CellMesh& mesh, const CoefficientFields& coeff, int cell,
                    double k, int ex, int ey, const Quadrature1D& quad,
                    Eigen::MatrixXd& local) {
  const int p = mesh.order();
  const int nl = p + 1;
  const double dx = mesh.element_width();
  const double dy = mesh.element_height();
  const double x0 = -kPi + ex * dx + kTwoPi * cell;
  const double y0 = mesh.floor() + ey * dy;
  local.setZero(nl * nl, nl * nl);
  double vx[3], dvx[3], vy[3], dvy[3];
  Eigen::VectorXd phi(nl * nl), g1(nl * nl), g2(nl * nl);
  for (int gy = 0; gy < quad.nodes.size(); ++gy) {
    lagrange_1d(p, quad.nodes[gy], vy, dvy);
    for (int gx = 0; gx < quad.nodes.size(); ++gx) {
      lagrange_1d(p, quad.nodes[gx], vx, dvx);
      const CoefficientSample s =
          coeff.at({x0 + quad.nodes[gx] * dx, y0 + quad.nodes[gy] * dy});
      const double w = quad.weights[gx] * quad.weights[gy] * dx * dy;
      for (int b = 0; b < nl; ++b) {
        for (int a = 0; a < nl; ++a) {
          const int i = b * nl + a;
          phi[i] = vx[a] * vy[b];
          g1[i] = dvx[a] * vy[b] / dx;
          g2[i] = vx[a] * dvy[b] / dy;
        }
      }
      const Eigen::VectorXd f1 = s.a11 * g1 + s.a12 * g2;
      const Eigen::VectorXd f2 = s.a12 * g1 + s.a22 * g2;
      local.noalias() += w * (f1 * g1.transpose() + f2 * g2.transpose() -
                              (k * k * s.c) * phi * phi.transpose());
    }
  }
}

// Open column → periodic column and phase factor.
inline int fold_col(int col, int nx) { return col == nx ? 0 : col; }

}  // namespace

SparseR assemble_volume(const CellMesh& mesh, const SurfaceModel& model,
                        ProfileChoice choice, int cell, double wavenumber) {
  const CoefficientFields coeff(model, choice);
  const Quadrature1D quad = reference_gauss(mesh.order() + 2);
  std::vector<Triplet> trip;
  trip.reserve(static_cast<size_t>(mesh.n1()) * mesh.n2() * mesh.local_size() *
               mesh.local_size());
  Eigen::MatrixXd local;
  std::vector<int> nodes;
  for (int ey = 0; ey < mesh.n2(); ++ey) {
    for (int ex = 0; ex < mesh.n1(); ++ex) {
      element_matrix(mesh, coeff, cell, wavenumber, ex, ey, quad, local);
      mesh.element_nodes(ex, ey, nodes);
      for (int i = 0; i < mesh.local_size(); ++i) {
        for (int j = 0; j < mesh.local_size(); ++j) {
          trip.emplace_back(nodes[i], nodes[j], local(i, j));
        }
      }
    }
  }
  SparseR m(mesh.open_size(), mesh.open_size());
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

// ---------------------------------------------------------------------------
// PeriodicSystem

PeriodicSystem::PeriodicSystem(const SurfaceModel& model, double wavenumber,
                               const CellMesh& mesh, const AlphaGrid& grid,
                               int fourier_modes)
    : model_(model), k_(wavenumber), mesh_(mesh), grid_(grid), modes_(fourier_modes) {
  if (!(wavenumber > 0.0)) throw InputError("wavenumber must be positive");
  if (fourier_modes < 0) throw InputError("number of Fourier modes must be non-negative");
  const int nx = mesh_.nx();
  const int ny = mesh_.ny();
  const int onx = mesh_.open_nx();
  const int nq = grid_.size();
  thetas_.resize(nq);
  for (int q = 0; q < nq; ++q) thetas_[q] = std::polar(1.0, -kTwoPi * grid_.node(q));

  volume_ = assemble_volume(mesh_, model_, ProfileChoice::kPeriodic, 0, k_);

  // Fourier functionals of the top trace on the open top nodes, before folding.
  const Quadrature1D tq = reference_gauss(10);
  const int p = mesh_.order();
  const double dx = mesh_.element_width();

  blocks_.resize(nq);
  parallel_for(nq, [&](int q) {
    auto block = std::make_unique<Block>();
    const double alpha = grid_.node(q);
    const cplx th = thetas_[q];
    std::vector<TripletC> ti, tf;
    ti.reserve(volume_.nonZeros());
    tf.reserve(nx * (2 * p + 1) * (p + 1));
    for (int outer = 0; outer < volume_.outerSize(); ++outer) {
      for (SparseR::InnerIterator it(volume_, outer); it; ++it) {
        const int r = static_cast<int>(it.row());
        const int c = static_cast<int>(it.col());
        const int rrow = r / onx, rcol = r % onx;
        const int crow = c / onx, ccol = c % onx;
        if (rrow == 0) continue;  // floor test functions are removed
        cplx v = it.value();
        if (rcol == nx) v *= std::conj(th);
        if (ccol == nx) v *= th;
        const int ri = (rrow - 1) * nx + fold_col(rcol, nx);
        if (crow == 0) {
          tf.emplace_back(ri, fold_col(ccol, nx), v);
        } else {
          ti.emplace_back(ri, (crow - 1) * nx + fold_col(ccol, nx), v);
        }
      }
    }
    // γ_j on periodic top nodes
    const int nm = 2 * modes_ + 1;
    block->fourier = Eigen::MatrixXcd::Zero(nm, nx);
    double lv[3], ld[3];
    for (int ex = 0; ex < mesh_.n1(); ++ex) {
      for (int g = 0; g < tq.nodes.size(); ++g) {
        const double x = -kPi + (ex + tq.nodes[g]) * dx;
        lagrange_1d(p, tq.nodes[g], lv, ld);
        for (int j = -modes_; j <= modes_; ++j) {
          const cplx e = std::polar(tq.weights[g] * dx / kTwoPi, -(j - alpha) * x);
          for (int a = 0; a <= p; ++a) {
            const int col = p * ex + a;
            block->fourier(j + modes_, fold_col(col, nx)) +=
                (col == nx ? th : cplx(1.0)) * lv[a] * e;
          }
        }
      }
    }
    // −2π Σ_j iβ_j conj(γ_j[m]) γ_j[n] on the top row
    Eigen::MatrixXcd dtn = Eigen::MatrixXcd::Zero(nx, nx);
    for (int j = -modes_; j <= modes_; ++j) {
      const cplx s = -kTwoPi * dtn_symbol(j - alpha, k_);
      const auto row = block->fourier.row(j + modes_);
      dtn.noalias() += s * row.adjoint() * row;
    }
    const int top = (ny - 2) * nx;
    for (int m = 0; m < nx; ++m) {
      for (int n = 0; n < nx; ++n) ti.emplace_back(top + m, top + n, dtn(m, n));
    }
    const int ni = nx * (ny - 1);
    block->interior.resize(ni, ni);
    block->interior.setFromTriplets(ti.begin(), ti.end());
    block->interior.makeCompressed();
    block->floor.resize(ni, nx);
    block->floor.setFromTriplets(tf.begin(), tf.end());
    block->floor.makeCompressed();
    block->lu.analyzePattern(block->interior);
    block->lu.factorize(block->interior);
    if (block->lu.info() != Eigen::Success) {
      std::ostringstream os;
      os << "factorization failed at alpha = " << alpha << ": " << block->lu.lastErrorMessage();
      throw SingularSystem(os.str());
    }
    blocks_[q] = std::move(block);
  });
}

VecC PeriodicSystem::solve(int q, const VecC& b, bool adjoint) const {
  if (adjoint) return blocks_[q]->lu.adjoint().solve(b);
  return blocks_[q]->lu.solve(b);
}

VecC PeriodicSystem::floor_coupling(int q, const VecC& g) const {
  return blocks_[q]->floor * g;
}

VecC PeriodicSystem::floor_coupling_adjoint(int q, const VecC& x) const {
  return blocks_[q]->floor.adjoint() * x;
}

// ---------------------------------------------------------------------------
// Coupling

Coupling::Coupling(const PeriodicSystem& system, const SurfaceModel& perturbed) {
  const PerturbationProfile& pert = perturbed.perturbation();
  cell_ = pert.cell_index();
  if (pert.is_zero()) return;
  const CellMesh& mesh = system.mesh();
  const CoefficientFields cp(perturbed, ProfileChoice::kPerturbed);
  const CoefficientFields c0(perturbed, ProfileChoice::kPeriodic);
  const Quadrature1D quad = reference_gauss(mesh.order() + 2);
  const double k = system.wavenumber();
  const int onx = mesh.open_nx();

  std::vector<std::pair<std::pair<int, int>, double>> entries;
  Eigen::MatrixXd lp, l0;
  std::vector<int> nodes;
  const double dx = mesh.element_width();
  for (int ex = 0; ex < mesh.n1(); ++ex) {
    bool touched = false;
    for (int g = 0; g < quad.nodes.size() && !touched; ++g) {
      const double t = -kPi + (ex + quad.nodes[g]) * dx + kTwoPi * cell_;
      touched = pert.value(t) != 0.0 || pert.derivative(t) != 0.0;
    }
    if (!touched) continue;
    for (int ey = 0; ey < mesh.n2(); ++ey) {
      element_matrix(mesh, cp, cell_, k, ex, ey, quad, lp);
      element_matrix(mesh, c0, cell_, k, ex, ey, quad, l0);
      const Eigen::MatrixXd d = lp - l0;
      if (d.cwiseAbs().maxCoeff() == 0.0) continue;
      mesh.element_nodes(ex, ey, nodes);
      for (int i = 0; i < mesh.local_size(); ++i) {
        for (int j = 0; j < mesh.local_size(); ++j) {
          if (nodes[i] < onx) continue;  // floor test functions are removed
          entries.push_back({{nodes[i], nodes[j]}, d(i, j)});
        }
      }
    }
  }
  std::vector<int> rmap(mesh.open_size(), -1), fmap(mesh.open_size(), -1);
  for (const auto& e : entries) {
    rmap[e.first.first] = 0;
    if (e.first.second < onx) {
      fmap[e.first.second] = 0;
    } else {
      rmap[e.first.second] = 0;
    }
  }
  for (int n = 0; n < mesh.open_size(); ++n) {
    if (rmap[n] == 0) {
      rmap[n] = static_cast<int>(interior_.size());
      interior_.push_back(n);
    }
    if (fmap[n] == 0) {
      fmap[n] = static_cast<int>(floor_.size());
      floor_.push_back(n);
    }
  }
  std::vector<Triplet> trr, trf;
  for (const auto& e : entries) {
    const int r = rmap[e.first.first];
    const int c = e.first.second;
    if (c < onx) {
      trf.emplace_back(r, fmap[c], e.second);
    } else {
      trr.emplace_back(r, rmap[c], e.second);
    }
  }
  const int nr = static_cast<int>(interior_.size());
  b_rr_.resize(nr, nr);
  b_rr_.setFromTriplets(trr.begin(), trr.end());
  b_rf_.resize(nr, static_cast<int>(floor_.size()));
  b_rf_.setFromTriplets(trf.begin(), trf.end());
}

// ---------------------------------------------------------------------------
// Coupled solve

namespace {

// Restriction R·(1/N)Σ_q e^{−2πiJα_q} E_q w_q onto coupled interior nodes.
VecC restrict_interior(const PeriodicSystem& sys, const Coupling& cp,
                       const std::vector<VecC>& w, bool with_phase) {
  const CellMesh& mesh = sys.mesh();
  const int nx = mesh.nx(), onx = mesh.open_nx();
  const int nq = sys.grid().size();
  const auto& nodes = cp.interior_nodes();
  VecC out = VecC::Zero(nodes.size());
  for (int q = 0; q < nq; ++q) {
    const cplx ph = with_phase ? std::conj(sys.grid().phase(cp.cell(), q)) : cplx(1.0);
    const cplx th = sys.theta(q);
    for (size_t r = 0; r < nodes.size(); ++r) {
      const int row = nodes[r] / onx, col = nodes[r] % onx;
      const cplx v = w[q][(row - 1) * nx + fold_col(col, nx)];
      out[r] += ph * (col == nx ? th * v : v);
    }
  }
  return out / static_cast<double>(nq);
}

// E_qᴴ Rᵀ y as an interior vector (without the cell phase).
VecC spread_interior(const PeriodicSystem& sys, const Coupling& cp, int q, const VecC& y) {
  const CellMesh& mesh = sys.mesh();
  const int nx = mesh.nx(), onx = mesh.open_nx();
  const cplx thc = std::conj(sys.theta(q));
  VecC out = VecC::Zero(sys.interior_size());
  const auto& nodes = cp.interior_nodes();
  for (size_t r = 0; r < nodes.size(); ++r) {
    const int row = nodes[r] / onx, col = nodes[r] % onx;
    out[(row - 1) * nx + fold_col(col, nx)] += col == nx ? thc * y[r] : y[r];
  }
  return out;
}

}  // namespace

BlochField solve_perturbed(const PeriodicSystem& system, const Coupling& coupling,
                           const BlochLoad& load, const ForwardSettings& settings,
                           bool adjoint, SolveStats* stats) {
  const CellMesh& mesh = system.mesh();
  const AlphaGrid& grid = system.grid();
  const int nq = grid.size();
  const int nx = mesh.nx();
  const int ni = system.interior_size();
  const bool has_floor = !load.floor.empty();
  if (adjoint && has_floor) throw InputError("adjoint solves take no Dirichlet data");
  if (!load.interior.empty() && static_cast<int>(load.interior.size()) != nq) {
    throw MeshMismatch("interior load does not match the alpha grid");
  }
  if (has_floor && static_cast<int>(load.floor.size()) != nq) {
    throw MeshMismatch("floor data do not match the alpha grid");
  }

  std::vector<VecC> w(nq);
  parallel_for(nq, [&](int q) {
    VecC r = load.interior.empty() ? VecC::Zero(ni) : load.interior[q];
    if (has_floor) r -= system.floor_coupling(q, load.floor[q]);
    w[q] = system.solve(q, r, adjoint);
  });

  if (stats) *stats = {};
  if (!coupling.empty()) {
    const int onx = mesh.open_nx();
    // coupled floor values of cell J
    VecC c;
    if (has_floor) {
      VecC gf = VecC::Zero(coupling.floor_nodes().size());
      for (int q = 0; q < nq; ++q) {
        const cplx ph = std::conj(grid.phase(coupling.cell(), q));
        for (size_t f = 0; f < coupling.floor_nodes().size(); ++f) {
          const int col = coupling.floor_nodes()[f] % onx;
          const cplx v = load.floor[q][fold_col(col, nx)];
          gf[f] += ph * (col == nx ? system.theta(q) * v : v);
        }
      }
      gf /= static_cast<double>(nq);
      c = coupling.floor_block().cast<cplx>() * gf;
    }
    const SparseC brr = coupling.interior_block().cast<cplx>();
    auto apply_t = [&](const VecC& x) {
      std::vector<VecC> s(nq);
      parallel_for(nq, [&](int q) {
        s[q] = system.solve(q, spread_interior(system, coupling, q, x), adjoint);
      });
      return restrict_interior(system, coupling, s, false);
    };
    VecC rhs = restrict_interior(system, coupling, w, true);
    if (has_floor) rhs -= apply_t(c);
    VecC v;
    const KrylovResult kr = gmres(
        [&](const VecC& x) -> VecC { return x + apply_t(brr * x); }, rhs, v,
        settings.gmres_tolerance, settings.gmres_max_iterations);
    if (stats) {
      stats->krylov_iterations = kr.iterations;
      stats->krylov_residual = kr.relative_residual;
    }
    if (!kr.converged) {
      std::ostringstream os;
      os << "coupled solve stalled after " << kr.iterations
         << " iterations, relative residual " << kr.relative_residual;
      throw NonConvergence(os.str());
    }
    VecC y = brr * v;
    if (has_floor) y += c;
    parallel_for(nq, [&](int q) {
      const VecC corr = system.solve(q, spread_interior(system, coupling, q, y), adjoint);
      w[q] -= grid.phase(coupling.cell(), q) * corr;
    });
  }

  BlochField out;
  out.grid = grid;
  out.fields.resize(nq);
  for (int q = 0; q < nq; ++q) {
    CellField f(nx, mesh.ny());
    if (has_floor) f.values.head(nx) = load.floor[q];
    f.values.tail(ni) = w[q];
    out.fields[q] = std::move(f);
  }
  return out;
}

std::vector<VecC> floor_data_adjoint(const PeriodicSystem& system,
                                     const Coupling& coupling, const BlochField& x) {
  const CellMesh& mesh = system.mesh();
  const AlphaGrid& grid = system.grid();
  const int nq = grid.size();
  const int nx = mesh.nx();
  const int ni = system.interior_size();
  std::vector<VecC> out(nq);
  std::vector<VecC> xi(nq);
  for (int q = 0; q < nq; ++q) xi[q] = x.fields[q].values.tail(ni);
  for (int q = 0; q < nq; ++q) out[q] = -system.floor_coupling_adjoint(q, xi[q]);
  if (!coupling.empty()) {
    const int onx = mesh.open_nx();
    const VecC px = restrict_interior(system, coupling, xi, true);
    const VecC bf = coupling.floor_block().transpose().cast<cplx>() * px;
    for (int q = 0; q < nq; ++q) {
      const cplx ph = grid.phase(coupling.cell(), q);
      const cplx thc = std::conj(system.theta(q));
      for (size_t f = 0; f < coupling.floor_nodes().size(); ++f) {
        const int col = coupling.floor_nodes()[f] % onx;
        out[q][fold_col(col, nx)] -= ph * (col == nx ? thc * bf[f] : bf[f]);
      }
    }
  }
  return out;
}

CellField solve_cell_alpha(const PeriodicSystem& system, int q, const VecC& top_load) {
  const CellMesh& mesh = system.mesh();
  CellField f(mesh.nx(), mesh.ny());
  f.values.tail(system.interior_size()) = system.solve(q, embed_top(system, top_load));
  return f;
}

VecC embed_top(const PeriodicSystem& system, const VecC& top) {
  VecC b = VecC::Zero(system.interior_size());
  b.tail(system.mesh().nx()) = top;
  return b;
}

std::vector<VecC> incident_top_loads(const PeriodicSystem& system,
                                     const IncidentField& incident) {
  const CellMesh& mesh = system.mesh();
  const AlphaGrid& grid = system.grid();
  const int K = grid.truncation();
  const int nx = mesh.nx(), p = mesh.order();
  const double dx = mesh.element_width();
  const double H = mesh.ceiling();
  const Quadrature1D quad = reference_gauss(p + 4);
  std::vector<VecC> cells(2 * K + 1, VecC::Zero(nx + 1));
  parallel_for(2 * K + 1, [&](int idx) {
    const int j = idx - K;
    double lv[3], ld[3];
    for (int ex = 0; ex < mesh.n1(); ++ex) {
      for (int g = 0; g < quad.nodes.size(); ++g) {
        const double x = -kPi + (ex + quad.nodes[g]) * dx;
        const cplx f = boundary_data_f(incident, H, x + kTwoPi * j) * (quad.weights[g] * dx);
        lagrange_1d(p, quad.nodes[g], lv, ld);
        for (int a = 0; a <= p; ++a) cells[idx][p * ex + a] += f * lv[a];
      }
    }
  });
  std::vector<VecC> out(grid.size(), VecC::Zero(nx));
  for (int q = 0; q < grid.size(); ++q) {
    const cplx thc = std::conj(system.theta(q));
    for (int j = -K; j <= K; ++j) {
      const cplx ph = grid.phase(j, q);
      const VecC& l = cells[j + K];
      out[q] += ph * l.head(nx);
      out[q][0] += ph * thc * l[nx];
    }
  }
  return out;
}

std::vector<VecC> bloch_floor_data(const AlphaGrid& grid,
                                   const std::vector<VecC>& per_cell) {
  const int K = grid.truncation();
  if (static_cast<int>(per_cell.size()) != 2 * K + 1) {
    throw MeshMismatch("floor data do not cover the truncated strip");
  }
  std::vector<VecC> out(grid.size(), VecC::Zero(per_cell[0].size()));
  for (int q = 0; q < grid.size(); ++q) {
    for (int j = -K; j <= K; ++j) out[q] += grid.phase(j, q) * per_cell[j + K];
  }
  return out;
}

std::vector<VecC> bloch_floor_data_adjoint(const AlphaGrid& grid,
                                           const std::vector<VecC>& per_alpha) {
  const int K = grid.truncation();
  std::vector<VecC> out(2 * K + 1, VecC::Zero(per_alpha[0].size()));
  for (int j = -K; j <= K; ++j) {
    for (int q = 0; q < grid.size(); ++q) {
      out[j + K] += std::conj(grid.phase(j, q)) * per_alpha[q];
    }
  }
  return out;
}

std::vector<VecC> top_traces(const PeriodicSystem& system, const BlochField& w) {
  const CellMesh& mesh = system.mesh();
  const AlphaGrid& grid = system.grid();
  const int K = grid.truncation(), nq = grid.size();
  const int nx = mesh.nx();
  const int top = (mesh.ny() - 1) * nx;
  std::vector<VecC> open(nq, VecC(nx + 1));
  for (int q = 0; q < nq; ++q) {
    open[q].head(nx) = w.fields[q].values.segment(top, nx);
    open[q][nx] = system.theta(q) * w.fields[q].values[top];
  }
  std::vector<VecC> out(2 * K + 1, VecC::Zero(nx + 1));
  for (int j = -K; j <= K; ++j) {
    for (int q = 0; q < nq; ++q) out[j + K] += std::conj(grid.phase(j, q)) * open[q];
    out[j + K] /= static_cast<double>(nq);
  }
  return out;
}

std::vector<VecC> top_traces_adjoint(const PeriodicSystem& system,
                                     const std::vector<VecC>& traces) {
  const CellMesh& mesh = system.mesh();
  const AlphaGrid& grid = system.grid();
  const int K = grid.truncation(), nq = grid.size();
  const int nx = mesh.nx();
  std::vector<VecC> out(nq, VecC::Zero(nx));
  for (int q = 0; q < nq; ++q) {
    VecC open = VecC::Zero(nx + 1);
    for (int j = -K; j <= K; ++j) open += grid.phase(j, q) * traces[j + K];
    open /= static_cast<double>(nq);
    out[q] = open.head(nx);
    out[q][0] += std::conj(system.theta(q)) * open[nx];
  }
  return out;
}

std::vector<VecC> top_dtn_traces(const PeriodicSystem& system, const BlochField& w) {
  const CellMesh& mesh = system.mesh();
  const AlphaGrid& grid = system.grid();
  const int K = grid.truncation(), nq = grid.size();
  const int nx = mesh.nx();
  const int M = system.fourier_modes();
  const int top = (mesh.ny() - 1) * nx;
  std::vector<VecC> open(nq);
  parallel_for(nq, [&](int q) {
    const double alpha = grid.node(q);
    const VecC coeff = system.fourier(q) * w.fields[q].values.segment(top, nx);
    VecC vals = VecC::Zero(nx + 1);
    for (int j = -M; j <= M; ++j) {
      const cplx s = dtn_symbol(j - alpha, system.wavenumber()) * coeff[j + M];
      if (s == cplx(0.0)) continue;
      for (int c = 0; c <= nx; ++c) vals[c] += s * std::polar(1.0, (j - alpha) * mesh.x1(c));
    }
    open[q] = vals;
  });
  std::vector<VecC> out(2 * K + 1, VecC::Zero(nx + 1));
  for (int j = -K; j <= K; ++j) {
    for (int q = 0; q < nq; ++q) out[j + K] += std::conj(grid.phase(j, q)) * open[q];
    out[j + K] /= static_cast<double>(nq);
  }
  return out;
}

std::vector<VecC> floor_gradients(const PeriodicSystem& system, const BlochField& w) {
  const CellMesh& mesh = system.mesh();
  const AlphaGrid& grid = system.grid();
  const int K = grid.truncation(), nq = grid.size();
  const int nx = mesh.nx(), p = mesh.order();
  double lv[3], ld[3];
  lagrange_1d(p, 0.0, lv, ld);
  const double dy = mesh.element_height();
  std::vector<VecC> per_q(nq, VecC::Zero(nx));
  for (int q = 0; q < nq; ++q) {
    for (int b = 0; b <= p; ++b) per_q[q] += (ld[b] / dy) * w.fields[q].values.segment(b * nx, nx);
  }
  std::vector<VecC> out(2 * K + 1, VecC::Zero(nx));
  for (int j = -K; j <= K; ++j) {
    for (int q = 0; q < nq; ++q) out[j + K] += std::conj(grid.phase(j, q)) * per_q[q];
    out[j + K] /= static_cast<double>(nq);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sampling of traces

TraceSampler::TraceSampler(const CellMesh& mesh, int truncation,
                           const std::vector<double>& x1)
    : order_(mesh.order()), truncation_(truncation), open_nx_(mesh.open_nx()) {
  const double dx = mesh.element_width();
  for (double x : x1) {
    const int cell = static_cast<int>(std::lround(x / kTwoPi));
    if (std::abs(cell) > truncation) {
      std::ostringstream os;
      os << "measurement point x1 = " << x << " lies outside the truncated strip";
      throw InputError(os.str());
    }
    const double s = x - kTwoPi * cell;
    int ex = static_cast<int>(std::floor((s + kPi) / dx));
    ex = std::clamp(ex, 0, mesh.n1() - 1);
    const double xi = (s + kPi) / dx - ex;
    double lv[3], ld[3];
    lagrange_1d(order_, xi, lv, ld);
    cells_.push_back(cell);
    first_col_.push_back(order_ * ex);
    weights_.push_back({lv[0], lv[1], order_ == 2 ? lv[2] : 0.0});
  }
}

VecC TraceSampler::sample(const std::vector<VecC>& traces) const {
  VecC out(size());
  for (int i = 0; i < size(); ++i) {
    const VecC& t = traces[cells_[i] + truncation_];
    cplx v = 0.0;
    for (int a = 0; a <= order_; ++a) v += weights_[i][a] * t[first_col_[i] + a];
    out[i] = v;
  }
  return out;
}

std::vector<VecC> TraceSampler::adjoint(const VecC& values) const {
  std::vector<VecC> out(2 * truncation_ + 1, VecC::Zero(open_nx_));
  for (int i = 0; i < size(); ++i) {
    VecC& t = out[cells_[i] + truncation_];
    for (int a = 0; a <= order_; ++a) t[first_col_[i] + a] += weights_[i][a] * values[i];
  }
  return out;
}

std::vector<double> MeasurementLine::abscissae() const {
  std::vector<double> x(size());
  for (int i = 0; i < size(); ++i) x[i] = -half_width + i * spacing();
  return x;
}

VecR MeasurementLine::weights() const {
  VecR w = VecR::Constant(size(), spacing());
  w[0] *= 0.5;
  w[size() - 1] *= 0.5;
  return w;
}

// ---------------------------------------------------------------------------
// ScatteringProblem

ScatteringProblem::ScatteringProblem(std::shared_ptr<const PeriodicSystem> system,
                                     const SurfaceModel& surface, ForwardSettings settings)
    : system_(std::move(system)), surface_(surface), settings_(settings) {
  if (surface.periodic().coeffs() != system_->model().periodic().coeffs()) {
    throw MeshMismatch("surface model does not share the factorized periodic profile");
  }
  coupling_ = Coupling(*system_, surface_);
}

namespace {

// Image point of the Green's split for a point source; the shift moves the
// source instead of the field.
Point effective_source(const IncidentField& incident) {
  return {incident.source.x1 - incident.shift, incident.source.x2};
}

}  // namespace

BlochLoad ScatteringProblem::load(const IncidentField& incident,
                                  double reference_height) const {
  const PeriodicSystem& sys = *system_;
  BlochLoad load;
  if (incident.kind == IncidentKind::kPointSource) {
    const GreensSplit split(incident.wavenumber, effective_source(incident),
                            reference_height);
    const CellMesh& mesh = sys.mesh();
    const int K = sys.grid().truncation();
    std::vector<VecC> cells(2 * K + 1, VecC(mesh.nx()));
    for (int j = -K; j <= K; ++j) {
      for (int c = 0; c < mesh.nx(); ++c) {
        const double x = mesh.x1(c) + kTwoPi * j;
        cells[j + K][c] = -split.value({x, surface_.height(x)});
      }
    }
    load.floor = bloch_floor_data(sys.grid(), cells);
  } else {
    const std::vector<VecC> tops = incident_top_loads(sys, incident);
    load.interior.resize(tops.size());
    for (size_t q = 0; q < tops.size(); ++q) load.interior[q] = embed_top(sys, tops[q]);
  }
  return load;
}

BlochField ScatteringProblem::solve(const IncidentField& incident,
                                    double reference_height, SolveStats* stats) const {
  return solve_perturbed(*system_, coupling_, load(incident, reference_height),
                         settings_, false, stats);
}

CauchyData ScatteringProblem::scattered_trace(const BlochField& w,
                                              const IncidentField& incident,
                                              const MeasurementLine& line,
                                              double reference_height,
                                              TruncationReport* report) const {
  const PeriodicSystem& sys = *system_;
  if (std::abs(line.height - sys.mesh().ceiling()) > 1e-12) {
    throw InputError("measurement line must coincide with the top of the strip");
  }
  CauchyData data;
  data.points = line.abscissae();
  data.height = line.height;
  const TraceSampler sampler(sys.mesh(), sys.grid().truncation(), data.points);
  const std::vector<VecC> tops = top_traces(sys, w);
  data.values = sampler.sample(tops);
  data.normals = sampler.sample(top_dtn_traces(sys, w));
  const double H = line.height;
  if (incident.kind == IncidentKind::kPointSource) {
    const GreensSplit split(incident.wavenumber, effective_source(incident),
                            reference_height);
    for (int i = 0; i < line.size(); ++i) {
      const FieldSample img = split.image_term({data.points[i], H});
      data.values[i] -= img.value;
      data.normals[i] -= img.d2;
    }
  } else {
    for (int i = 0; i < line.size(); ++i) {
      const FieldSample s = eval_incident(incident, {data.points[i], H});
      data.values[i] -= s.value;
      data.normals[i] += boundary_data_f(incident, H, data.points[i]) - s.d2;
    }
  }
  if (report) {
    // scattered energy on the top row per cell
    const int K = sys.grid().truncation();
    std::vector<double> energy(2 * K + 1, 0.0);
    const CellMesh& mesh = sys.mesh();
    for (int j = -K; j <= K; ++j) {
      for (int c = 0; c < mesh.nx(); ++c) {
        const double x = mesh.x1(c) + kTwoPi * j;
        cplx ui;
        if (incident.kind == IncidentKind::kPointSource) {
          const GreensSplit split(incident.wavenumber, effective_source(incident),
                                  reference_height);
          ui = split.image_term({x, H}).value;
        } else {
          ui = eval_incident(incident, {x, H}).value;
        }
        energy[j + K] += std::norm(tops[j + K][c] - ui);
      }
    }
    double total = 0.0;
    for (double e : energy) total += e;
    const double edge = K == 0 ? 0.0 : energy.front() + energy.back();
    report->edge_fraction = total > 0.0 ? edge / total : 0.0;
    report->warning = report->edge_fraction > 1e-3;
  }
  return data;
}

double plane_wave_alpha(double wavenumber, double theta) {
  double a = -wavenumber * std::sin(theta);
  a -= std::ceil(a - 0.5);
  return a;
}

std::vector<Efficiency> rayleigh_efficiencies(const PeriodicSystem& system, int q,
                                              const VecC& scattered_top,
                                              double incidence_angle) {
  const double k = system.wavenumber();
  const double alpha = system.grid().node(q);
  const int M = system.fourier_modes();
  const VecC coeff = system.fourier(q) * scattered_top;
  const double beta_inc = k * std::cos(incidence_angle);
  std::vector<Efficiency> out;
  for (int j = -M; j <= M; ++j) {
    const double xi = j - alpha;
    if (std::abs(xi) >= k) continue;
    const double beta = std::sqrt(k * k - xi * xi);
    out.push_back({j, beta / beta_inc * std::norm(coeff[j + M])});
  }
  return out;
}

}  // namespace perisurf
