#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "perisurf/inversion.hpp"
#include "perisurf/sampling.hpp"

namespace perisurf {

/// Everything one experiment needs: truth, measurement setup, noise and the
/// discretization of both the data synthesis and the inversion.
struct Scenario {
  // [scenario]
  std::string name = "scenario";
  double wavenumber = 3.0;
  double noise_level = 0.05;
  std::uint64_t seed = 1;
  double measurement_half_width = 14.0 * kPi;  // A
  double measurement_step = kPi / 300.0;       // h_mea
  double measurement_height = 3.0;             // H
  int source_half_count = 5;                   // point sources j = −P..P
  double source_spacing = kTwoPi;
  double source_height = 3.0;
  int translation = 4;  // L
  double herglotz_lower = 0.0;
  double herglotz_upper = 1.0;

  // [truth]
  VecR periodic = VecR::Constant(1, 1.5);
  PerturbationShape perturbation_shape = PerturbationShape::kBumps;
  int perturbation_cell = 0;
  double perturbation_scale = 1.0;
  VecR perturbation_coeffs;  // bumps only; empty means p ≡ 0
  double strip_floor = 1.15;
  double strip_ceiling = 3.0;
  double flattening_height = 0.0;  // 0 selects the default

  // [discretization]
  int mesh_n1 = 32;
  int mesh_n2 = 16;
  int order = 2;
  int truncation = 8;
  int fourier_modes = 32;
  int data_refinement = 2;  // data mesh is this many times finer
  int data_extra_cells = 1; // data use truncation + this
  int half_circle_nodes = 256;
  int sampling_m1 = 400;
  int sampling_m2 = 100;
  double sampling_a = -10.0 * kPi;
  double sampling_b = 10.0 * kPi;
  double sampling_c = 1.2;
  double sampling_d = 1.9;

  // [inversion]
  int periodic_size = 9;
  int bump_size = 12;
  double epsilon = 0.06;
  int max_outer = 25;
  int max_halvings = 5;
  double min_decrease = 0.02;
  int cgne_max_iterations = 20;
  double cgne_tolerance = 1e-2;
  double cgne_discrepancy = 1.05;
  bool truth_initialization = false;  // initial_guess = truth | sampling

  /// Throws InputError on inconsistent settings.
  void validate() const;

  SurfaceModel truth() const;
  MeasurementLine line() const;
  SamplingGrid sampling_grid() const;
  std::vector<Point> sources() const;
  IncidentField herglotz() const;
  /// Settings of the inversion model (coarse mesh).
  InversionModel inversion_model() const;
  NewtonConfig newton_config() const;
  /// Settings of the data synthesis (fine mesh).
  ForwardSettings data_settings() const;

  bool operator==(const Scenario& o) const;
};

/// Flat `key = value` text with [scenario], [truth], [discretization] and
/// [inversion] sections. Numbers may be written as multiples of pi
/// ("14*pi", "pi/300", "-2pi"). Unknown keys are an InputError.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);
/// Canonical text; parse_scenario(serialize_scenario(s)) == s.
std::string serialize_scenario(const Scenario& s);

/// 64-bit FNV-1a of the canonical text, as 16 hex digits.
std::string scenario_hash(const Scenario& s);
std::string fnv1a_hex(const std::string& bytes);

/// One measured data set: clean and noisy Cauchy data of one incident field.
struct MeasurementRecord {
  std::string label;
  IncidentField incident;
  CauchyData clean;
  CauchyData noisy;
  double noise_scale_values = 0.0;   // σ·max|u^s|
  double noise_scale_normals = 0.0;  // σ·max|∂_ν u^s|
  double edge_fraction = 0.0;
};

struct SimulationData {
  /// Point sources for the sampling stage, truth frame.
  std::vector<MeasurementRecord> sampling;
  /// Herglotz data U₀ and U_L, recorded in the frame centred on `frame_cell`.
  std::vector<MeasurementRecord> herglotz;
  int frame_cell = 0;
};

/// Forward-solves every record on the fine discretization and adds noise
/// σ·maxᵢ|u_s(xᵢ)|·(g₁ + i g₂)/√2 from the counter-based generator.
SimulationData synthesize_data(const Scenario& s);

/// Data files: sampling.csv, herglotz.csv, scenario.ini.
void write_data(const Scenario& s, const SimulationData& data, const std::string& dir);
/// Reads data written by write_data and checks them against `s`.
SimulationData read_data(const Scenario& s, const std::string& dir);

struct SamplingOutcome {
  SamplingGrid grid;
  IndicatorMatrix matrix;
  double c0 = 0.0;
  int cell = 0;
  LocationReport location;
};

SamplingOutcome run_sampling(const Scenario& s, const SimulationData& data);

struct PipelineOutcome {
  SamplingOutcome sampling;
  StageResult part1;
  StageResult part2;
  VecR C;
  VecR D;
  /// Errors against the truth on one cell (translated frame).
  double periodic_error = 0.0;      // ‖ζ − ζ_rec‖∞ / ‖ζ‖∞
  double perturbation_error = 0.0;  // ‖p − p_rec‖∞ / ‖p‖∞, 0 when p ≡ 0
};

/// Least-squares coefficients of p (cell-local) in the N-term bump basis.
VecR project_on_bumps(const PerturbationProfile& p, int size);

using StageLogger = std::function<void(const std::string& stage, const IterationRecord&)>;

/// Sampling → translate → Part I on U_L → Part II on U₀. With
/// truth_initialization the Newton stages start from the projected truth.
PipelineOutcome run_pipeline(const Scenario& s, const SimulationData& data,
                             const StageLogger& log = {});

/// Reconstruction curve on `count` uniform samples of [−π, π]:
/// t, ζ_truth, ζ_rec, p_truth, p_rec (translated frame).
Eigen::MatrixXd reconstruction_curve(const Scenario& s, const PipelineOutcome& out,
                                     int count = 2001);

/// Writers of the plotting artifacts. Every CSV starts with a `# {json}`
/// header carrying the scenario hash and seed.
void write_indicator(const Scenario& s, const SamplingOutcome& out, const std::string& dir);
void write_sampling_report(const Scenario& s, const SamplingOutcome& out,
                           const std::string& dir);
void write_inversion(const Scenario& s, const PipelineOutcome& out, const std::string& dir);

/// Shortest round-trip decimal text of x (locale independent).
std::string format_double(double x);

}  // namespace perisurf
