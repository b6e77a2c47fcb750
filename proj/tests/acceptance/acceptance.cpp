// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Pass criterion numbers as arguments to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <Eigen/QR>

#include "perisurf/errors.hpp"
#include "perisurf/inversion.hpp"
#include "perisurf/oracles.hpp"
#include "perisurf/scenario.hpp"
#include "perisurf/shape_calculus.hpp"

#ifndef PERISURF_SOURCE_DIR
#define PERISURF_SOURCE_DIR "."
#endif
#ifndef PERISURF_CLI
#define PERISURF_CLI "perisurf"
#endif

namespace fs = std::filesystem;
using namespace perisurf;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool passed = false;
  std::string summary;
};

double elapsed(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

Outcome from_oracle(const OracleCheck& c) {
  return {c.passed, c.name + " " + fmt(c.value) + " < " + fmt(c.tolerance) + " (" + c.detail + ")"};
}

// ------------------------------------------------------------- 1 .. 4

Outcome criterion1() {
  const auto t0 = Clock::now();
  Outcome o = from_oracle(oracle_flat_surface(64));
  const double t = elapsed(t0);
  o.passed = o.passed && t < 30.0;
  o.summary += ", " + fmt(t) + " s of 30 s";
  return o;
}

Outcome criterion2() { return from_oracle(oracle_energy_balance(64)); }
Outcome criterion3() { return from_oracle(oracle_bloch_isometry()); }
Outcome criterion4() { return from_oracle(oracle_adjoint_pairing(4, 24, 10)); }

// ------------------------------------------------------------- 5

VecR example1_periodic() {
  VecR c = VecR::Zero(4);
  c << 1.5, 0.0, 1.0 / 24, -1.0 / 16;
  return c;
}

double sup_norm(const std::function<double(double)>& f) {
  double m = 0.0;
  for (int i = 0; i <= 4000; ++i) m = std::max(m, std::abs(f(-kPi + kTwoPi * i / 4000)));
  return m;
}

// Directions are scaled to max|h| = 1 so that ε is the surface displacement.
// On coarser meshes the discretized derivative and the derivative of the
// discrete map differ by about 1%, which masks the O(ε) remainder.
Outcome criterion5() {
  const double k = 3.0;
  const int K = 4, N = 12, n = 48;
  const double H0 = 2.93;
  const VecR D0 =
      project_on_bumps(PerturbationProfile::analytic(PerturbationShape::kExample1, 0), N);
  const SurfaceModel base(PeriodicProfile(example1_periodic()), PerturbationProfile::bumps(D0, 0),
                          1.15, 3.0, H0);
  const CellMesh mesh(n, n / 2, 2, 1.15, 3.0);
  ForwardSettings st;
  st.truncation = K;
  st.n1 = n;
  st.n2 = n / 2;
  const AlphaGrid grid = AlphaGrid::avoiding_anomalies(K, k);
  const MeasurementLine line{(K - 1) * kTwoPi, 30 * (K - 1), 3.0};
  const IncidentField inc = IncidentField::herglotz(k);
  auto sys = std::make_shared<const PeriodicSystem>(base, k, mesh, grid, 32);
  const ScatterOperatorContext ctx(sys, base, inc, line, st);

  std::ostringstream msg;
  bool ok = true;
  auto check = [&](const std::string& name, const VecC& deriv,
                   const std::function<VecC(double)>& scatter) {
    const double dn = std::sqrt(ctx.trace_inner(deriv, deriv).real());
    double prev = 0.0;
    msg << name << " errors";
    for (double eps : {1e-2, 5e-3, 2.5e-3}) {
      const VecC fd = (scatter(eps) - ctx.scattered()) / eps - deriv;
      const double e = std::sqrt(ctx.trace_inner(fd, fd).real()) / dn;
      msg << " " << fmt(e);
      if (prev > 0.0) {
        const double ratio = prev / e;
        msg << " (ratio " << fmt(ratio) << ")";
        ok = ok && ratio >= 1.7 && ratio <= 2.3;
      }
      prev = e;
    }
    msg << "; ";
  };

  // perturbation direction: bump coefficients
  VecR dd(N);
  for (int i = 0; i < N; ++i) dd[i] = std::sin(1.3 * i + 0.4);
  dd /= sup_norm([&](double t) { return PerturbationProfile::bumps(dd, 0).value(t); });
  check("bumps", apply_MB(ctx, dd), [&](double eps) {
    const SurfaceModel m = base.with_perturbation(PerturbationProfile::bumps(D0 + eps * dd, 0));
    return ScatterOperatorContext(sys, m, inc, line, st).scattered();
  });

  // periodic direction: trigonometric coefficients
  VecR dc = VecR::Zero(5);
  dc << 0.5, -0.3, 0.2, 0.4, -0.5;
  dc /= sup_norm([&](double t) { return PeriodicProfile(dc).value(t); });
  check("periodic", apply_MA(ctx, dc), [&](double eps) {
    VecR c = VecR::Zero(5);
    c.head(4) = example1_periodic();
    c += eps * dc;
    const SurfaceModel m = base.with_periodic(PeriodicProfile(c));
    auto s = std::make_shared<const PeriodicSystem>(m, k, mesh, grid, 32);
    return ScatterOperatorContext(s, m, inc, line, st).scattered();
  });
  msg << "ratios in [1.7, 2.3]";
  return {ok, msg.str()};
}

// ------------------------------------------------------------- 6

// H¹ norm over the truncated strip, measured with the physical coefficients
// of the periodic surface pulled back to the flattened cells.
class StripH1 {
 public:
  StripH1(const PeriodicSystem& sys) : mesh_(sys.mesh()) {
    const SparseR s0 = assemble_volume(mesh_, sys.model(), ProfileChoice::kPeriodic, 0, 0.0);
    const SparseR s1 = assemble_volume(mesh_, sys.model(), ProfileChoice::kPeriodic, 0, 1.0);
    gram_ = (2.0 * s0 - s1).cast<cplx>();  // stiffness + mass
  }

  double operator()(const BlochField& w) const {
    const StripField u = bloch_inverse(w);
    const int K = u.truncation;
    const int nx = mesh_.nx(), ny = mesh_.ny();
    double sum = 0.0;
    for (int j = -K; j <= K; ++j) {
      const CellField right = j < K ? u.cell(j + 1) : bloch_inverse_cell(w, K + 1);
      VecC open(mesh_.open_size());
      for (int r = 0; r < ny; ++r) {
        for (int c = 0; c < nx; ++c) open[mesh_.open_node(c, r)] = u.cell(j).at(c, r);
        open[mesh_.open_node(nx, r)] = right.at(0, r);
      }
      sum += open.dot(gram_ * open).real();
    }
    return std::sqrt(sum);
  }

 private:
  CellMesh mesh_;
  SparseC gram_;
};

Outcome criterion6() {
  const double k = 3.0;
  const int K = 12, n = 16;
  ForwardSettings st;
  st.truncation = K;
  st.n1 = n;
  st.n2 = n / 2;
  const SurfaceModel periodic(PeriodicProfile(example1_periodic()), PerturbationProfile::zero(),
                              1.15, 3.0, 2.93);
  const SurfaceModel perturbed =
      periodic.with_perturbation(PerturbationProfile::analytic(PerturbationShape::kExample1, 0));
  const CellMesh mesh(n, n / 2, 2, 1.15, 3.0);
  auto sys = std::make_shared<const PeriodicSystem>(periodic, k, mesh,
                                                    AlphaGrid::avoiding_anomalies(K, k), 32);
  const ScatteringProblem with_p(sys, perturbed, st);
  const ScatteringProblem without_p(sys, periodic, st);
  const StripH1 norm(*sys);

  std::vector<double> Ls = {1, 2, 4, 8}, diffs;
  double field1 = 0.0;
  std::ostringstream msg;
  msg << "|u_T - u_0|_H1:";
  for (double L : Ls) {
    const IncidentField inc = IncidentField::herglotz(k).shifted(kTwoPi * L);
    const BlochField wt = with_p.solve(inc);
    const BlochField w0 = without_p.solve(inc);
    BlochField d = wt;
    for (size_t q = 0; q < d.fields.size(); ++q) d.fields[q].values -= w0.fields[q].values;
    diffs.push_back(norm(d));
    if (L == 1) field1 = norm(wt);
    msg << " " << fmt(diffs.back());
  }
  // least-squares slope of log diff against log L
  double mx = 0, my = 0;
  for (size_t i = 0; i < Ls.size(); ++i) {
    mx += std::log(Ls[i]) / Ls.size();
    my += std::log(diffs[i]) / Ls.size();
  }
  double sxy = 0, sxx = 0;
  for (size_t i = 0; i < Ls.size(); ++i) {
    sxy += (std::log(Ls[i]) - mx) * (std::log(diffs[i]) - my);
    sxx += (std::log(Ls[i]) - mx) * (std::log(Ls[i]) - mx);
  }
  const double slope = sxy / sxx;
  const double share = diffs[2] / field1;
  bool monotone = true;
  for (size_t i = 1; i < diffs.size(); ++i) monotone = monotone && diffs[i] < diffs[i - 1];
  msg << "; slope " << fmt(slope) << " <= -0.5; L=4 share of |u_T^1| " << fmt(share)
      << " < 0.02" << (monotone ? "" : "; not monotone");
  return {monotone && slope <= -0.5 && share < 0.02, msg.str()};
}

// ------------------------------------------------------------- 7, 8

struct ExampleRun {
  Scenario scenario;
  SimulationData data;
  std::unique_ptr<PipelineOutcome> outcome;
  double synth_seconds = 0.0;
  double sampling_seconds = 0.0;
  double total_seconds = 0.0;
  std::string error;
};

ExampleRun& example(int which) {
  static std::map<int, ExampleRun> runs;
  auto it = runs.find(which);
  if (it != runs.end()) return it->second;
  ExampleRun& r = runs[which];
  const auto t0 = Clock::now();
  try {
    r.scenario = load_scenario(std::string(PERISURF_SOURCE_DIR) + "/configs/example" +
                               std::to_string(which) + ".ini");
    r.data = synthesize_data(r.scenario);
    r.synth_seconds = elapsed(t0);
    const auto t1 = Clock::now();
    run_sampling(r.scenario, r.data);
    r.sampling_seconds = elapsed(t1);
    r.outcome = std::make_unique<PipelineOutcome>(run_pipeline(r.scenario, r.data));
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  r.total_seconds = elapsed(t0);
  return r;
}

Outcome criterion7() {
  struct Expect {
    int which, J;
    double c0;
  };
  bool ok = true;
  std::ostringstream msg;
  for (const Expect& e : {Expect{1, -3, 1.4987}, Expect{2, 2, 1.5216}}) {
    ExampleRun& r = example(e.which);
    msg << "example " << e.which << ": ";
    if (!r.outcome) {
      ok = false;
      msg << "failed (" << r.error << "); ";
      continue;
    }
    const SamplingOutcome& s = r.outcome->sampling;
    const bool pass = s.cell == e.J && std::abs(s.c0 - e.c0) <= 0.03 &&
                      r.synth_seconds + r.sampling_seconds < 600.0;
    ok = ok && pass;
    msg << "J = " << s.cell << " (want " << e.J << "), c0 = " << fmt(s.c0) << " (want "
        << e.c0 << " +- 0.03), " << fmt(r.synth_seconds + r.sampling_seconds) << " s; ";
  }
  msg << "budget 600 s each";
  return {ok, msg.str()};
}

Outcome criterion8() {
  bool ok = true;
  std::ostringstream msg;
  for (int which : {1, 2}) {
    ExampleRun& r = example(which);
    msg << "example " << which << ": ";
    if (!r.outcome) {
      ok = false;
      msg << "failed (" << r.error << "); ";
      continue;
    }
    const PipelineOutcome& o = *r.outcome;
    const bool pass =
        o.periodic_error < 0.05 && o.perturbation_error < 0.15 && r.total_seconds < 3600.0;
    ok = ok && pass;
    msg << "zeta " << fmt(o.periodic_error) << " < 0.05, p " << fmt(o.perturbation_error)
        << " < 0.15, " << fmt(r.total_seconds) << " s; ";
  }
  msg << "budget 3600 s each";
  return {ok, msg.str()};
}

// ------------------------------------------------------------- 9

Outcome criterion9() {
  std::mt19937_64 gen(42);
  std::normal_distribution<double> g;
  double worst = 0.0;
  const int trials = 20;
  for (int t = 0; t < trials; ++t) {
    Eigen::MatrixXcd A(8, 5);
    VecC b(8);
    VecR w(8);
    for (int i = 0; i < 8; ++i) {
      for (int j = 0; j < 5; ++j) A(i, j) = cplx(g(gen), g(gen));
      b[i] = cplx(g(gen), g(gen));
      w[i] = 0.5 + std::abs(g(gen));
    }
    // real unknowns: stack real and imaginary rows of W^{1/2}A
    Eigen::MatrixXd R(16, 5);
    VecR rb(16);
    for (int i = 0; i < 8; ++i) {
      const double s = std::sqrt(w[i]);
      R.row(i) = s * A.row(i).real();
      R.row(8 + i) = s * A.row(i).imag();
      rb[i] = s * b[i].real();
      rb[8 + i] = s * b[i].imag();
    }
    const VecR ref = R.colPivHouseholderQr().solve(rb);
    CgneConfig cfg;
    cfg.max_iterations = 50;
    cfg.tolerance = 1e-13;
    const CgneResult res = cgne_solve([&](const VecR& x) { return VecC(A * x.cast<cplx>()); },
                                      [&](const VecC& y) {
                                        return VecR((A.adjoint() * w.cast<cplx>().cwiseProduct(y)).real());
                                      },
                                      b, 5, w, cfg);
    worst = std::max(worst, (res.solution - ref).norm() / ref.norm());
  }
  return {worst < 1e-8, "max relative distance to dense least squares " + fmt(worst) +
                            " < 1e-8 over " + std::to_string(trials) + " random 8x5 systems"};
}

// ------------------------------------------------------------- 10

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

Outcome criterion10() {
  const fs::path root = fs::temp_directory_path() / ("perisurf_repro_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  // reduced problem; the same code path as the desk scenarios
  const fs::path cfg = root / "small.ini";
  {
    std::ofstream f(cfg);
    f << "[scenario]\nname = repro\nseed = 7\nmeasurement_half_width = 4*pi\n"
         "measurement_step = pi/30\nsource_half_count = 2\ntranslation = 1\n"
         "[truth]\nperiodic = 1.5, 1/8\nperturbation = example2\nperturbation_cell = 1\n"
         "[discretization]\nmesh_n1 = 8\nmesh_n2 = 4\ntruncation = 3\nfourier_modes = 16\n"
         "sampling_m1 = 20\nsampling_m2 = 10\nsampling_a = -2*pi\nsampling_b = 2*pi\n";
  }
  std::ostringstream msg;
  const std::string cli = PERISURF_CLI;
  int status = 0;
  for (int run : {1, 2}) {
    const std::string threads = run == 1 ? "1" : "3";
    const std::string cmd = "PERISURF_THREADS=" + threads + " \"" + cli + "\" simulate --config \"" +
                            cfg.string() + "\" --out \"" + (root / std::to_string(run)).string() +
                            "\" > /dev/null";
    status |= std::system(cmd.c_str());
  }
  if (status != 0) {
    fs::remove_all(root);
    return {false, "simulate exited with status " + std::to_string(status)};
  }
  bool ok = true;
  int files = 0;
  for (const auto& entry : fs::directory_iterator(root / "1")) {
    const fs::path other = root / "2" / entry.path().filename();
    const bool same = fs::exists(other) && slurp(entry.path()) == slurp(other);
    ok = ok && same;
    ++files;
    if (!same) msg << entry.path().filename().string() << " differs; ";
  }
  ok = ok && files >= 3;
  msg << files << " files compared byte by byte (1 and 3 threads)";
  fs::remove_all(root);
  return {ok, msg.str()};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria = {
      criterion1, criterion2, criterion3, criterion4, criterion5,
      criterion6, criterion7, criterion8, criterion9, criterion10};
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("raised: ") + e.what()};
    }
    failed += !o.passed;
    std::cout << "criterion " << id << ": " << (o.passed ? "PASS" : "FAIL") << "  " << o.summary
              << "  [" << fmt(elapsed(t0)) << " s]" << std::endl;
  }
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : "all criteria passed")
            << std::endl;
  return failed ? 1 : 0;
}
