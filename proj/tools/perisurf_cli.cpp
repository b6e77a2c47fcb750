// perisurf command line: simulate, sample, invert, verify.
//
// Exit codes: 0 ok, 1 input error, 2 numerical failure. Failures also print
// one JSON error record on stderr (and into <out>/error.json when known).

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "perisurf/errors.hpp"
#include "perisurf/oracles.hpp"
#include "perisurf/scenario.hpp"

namespace {

using namespace perisurf;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void check_thread_env() {
  const char* env = std::getenv("PERISURF_THREADS");
  if (env == nullptr || *env == '\0') return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) {
    throw InputError(std::string("PERISURF_THREADS must be a positive integer, got '") + env + "'");
  }
}

int report_error(const std::string& kind, const std::string& message, const std::string& out_dir,
                 int code) {
  nlohmann::json j{{"error", kind}, {"message", message}, {"exit_code", code}};
  std::cerr << j.dump() << "\n";
  if (!out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    std::ofstream f(std::filesystem::path(out_dir) / "error.json");
    if (f) f << j.dump(2) << "\n";
  }
  return code;
}

int cmd_simulate(const std::string& config, const std::string& out) {
  const auto t0 = Clock::now();
  const Scenario s = load_scenario(config);
  const SimulationData data = synthesize_data(s);
  write_data(s, data, out);
  auto max_edge = [](const std::vector<MeasurementRecord>& set) {
    double e = 0.0;
    for (const MeasurementRecord& r : set) e = std::max(e, r.edge_fraction);
    return e;
  };
  const double edge = max_edge(data.herglotz);
  std::cout << "simulate: " << data.sampling.size() << " point-source records, "
            << data.herglotz.size() << " Herglotz records (frame cell " << data.frame_cell
            << "), hash " << scenario_hash(s) << ", " << seconds_since(t0) << " s\n"
            << "  edge energy fraction: point sources " << max_edge(data.sampling)
            << ", Herglotz " << edge << "\n";
  // the inversion reads only the Herglotz records
  if (edge > 1e-3) {
    std::cerr << "warning: " << edge
              << " of the Herglotz scattered energy sits in the outermost cells; raise truncation\n";
  }
  return 0;
}

int cmd_sample(const std::string& data_dir, const std::string& config, const std::string& out) {
  const auto t0 = Clock::now();
  const Scenario s = load_scenario(config);
  const SimulationData data = read_data(s, data_dir);
  SamplingOutcome o;
  o.grid = s.sampling_grid();
  std::vector<CauchyData> cauchy;
  std::vector<Point> src;
  for (const MeasurementRecord& r : data.sampling) {
    cauchy.push_back(r.noisy);
    src.push_back(r.incident.source);
  }
  o.matrix = indicator_matrix(o.grid, cauchy, src, s.half_circle_nodes, s.wavenumber);
  write_indicator(s, o, out);  // kept even when the location is ambiguous
  o.c0 = estimate_c0(o.matrix, o.grid);
  o.cell = estimate_J(o.matrix, o.grid, &o.location);
  write_sampling_report(s, o, out);
  std::cout << "sample: J = " << o.cell << ", c0 = " << o.c0 << ", " << seconds_since(t0)
            << " s\n";
  return 0;
}

int cmd_invert(const std::string& data_dir, const std::string& config, const std::string& out) {
  const auto t0 = Clock::now();
  const Scenario s = load_scenario(config);
  const SimulationData data = read_data(s, data_dir);
  const PipelineOutcome o = run_pipeline(s, data, [](const std::string& stage, const IterationRecord& r) {
    const nlohmann::json row{{"stage", stage},          {"iteration", r.iteration},
                             {"residual", r.residual},   {"step_norm", r.step_norm},
                             {"inner", r.inner_iterations}, {"halvings", r.halvings}};
    std::cerr << row.dump() << "\n";
  });
  write_indicator(s, o.sampling, out);
  write_sampling_report(s, o.sampling, out);
  write_inversion(s, o, out);
  std::cout << "invert: J = " << o.sampling.cell << ", c0 = " << o.sampling.c0 << "\n"
            << "  part1 " << status_name(o.part1.status) << " after " << o.part1.history.size()
            << " steps, residual " << o.part1.initial_residual << " -> " << o.part1.final_residual
            << ", periodic error " << o.periodic_error << "\n"
            << "  part2 " << status_name(o.part2.status) << " after " << o.part2.history.size()
            << " steps, residual " << o.part2.initial_residual << " -> " << o.part2.final_residual
            << ", perturbation error " << o.perturbation_error << "\n"
            << "  " << seconds_since(t0) << " s\n";
  if (o.part1.status == NewtonStatus::kStepControlFailed ||
      o.part2.status == NewtonStatus::kStepControlFailed) {
    return 2;
  }
  return 0;
}

int cmd_verify(bool quick) {
  bool ok = true;
  for (const OracleCheck& c : run_oracles(quick)) {
    ok = ok && c.passed;
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " " << c.value << " < "
              << c.tolerance << "  (" << c.detail << ")\n";
  }
  std::cout << (ok ? "all oracle checks passed\n" : "oracle checks failed\n");
  return ok ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"perisurf: scattering by locally perturbed periodic surfaces and its inversion"};
  app.require_subcommand(1);
  std::string config, out, data;
  bool quick = false;

  auto* sim = app.add_subcommand("simulate", "synthesize noisy Cauchy data");
  sim->add_option("--config", config, "scenario file")->required();
  sim->add_option("--out", out, "output directory")->required();

  auto* smp = app.add_subcommand("sample", "indicator matrix and the initial guess (J, c0)");
  smp->add_option("--data", data, "data directory")->required();
  smp->add_option("--config", config, "scenario file")->required();
  smp->add_option("--out", out, "output directory")->required();

  auto* inv = app.add_subcommand("invert", "sampling followed by both Newton-CG stages");
  inv->add_option("--data", data, "data directory")->required();
  inv->add_option("--config", config, "scenario file")->required();
  inv->add_option("--out", out, "output directory")->required();

  auto* ver = app.add_subcommand("verify", "run the built-in oracle checks");
  ver->add_flag("--quick", quick, "coarser meshes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    check_thread_env();
    if (sim->parsed()) return cmd_simulate(config, out);
    if (smp->parsed()) return cmd_sample(data, config, out);
    if (inv->parsed()) return cmd_invert(data, config, out);
    return cmd_verify(quick);
  } catch (const InputError& e) {
    return report_error(e.kind(), e.what(), out, 1);
  } catch (const Error& e) {
    return report_error(e.kind(), e.what(), out, 2);
  } catch (const std::filesystem::filesystem_error& e) {
    return report_error("IOError", e.what(), out, 1);
  } catch (const std::exception& e) {
    return report_error("InternalError", e.what(), out, 2);
  }
}
