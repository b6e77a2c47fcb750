#include "perisurf/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

#include <Eigen/QR>

#include "json.hpp"

#include "perisurf/errors.hpp"
#include "perisurf/parallel.hpp"
#include "perisurf/rng.hpp"

namespace perisurf {

using nlohmann::json;

// ---------------------------------------------------------------- numbers

std::string format_double(double x) {
  if (!std::isfinite(x)) throw InputError("cannot format a non-finite number");
  if (x == 0.0) return "0";  // folds −0
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double plain_number(const std::string& text, const std::string& whole) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && text[0] == '+') ++first;
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) {
    throw InputError("not a number: '" + whole + "'");
  }
  return v;
}

// [-]a, [-]a*pi, [-]api, pi, optionally followed by /b.
double parse_real(const std::string& raw) {
  std::string s;
  for (char ch : raw) {
    if (ch != ' ' && ch != '\t') s += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  }
  if (s.empty()) throw InputError("empty number");
  std::string num = s, den;
  const auto slash = s.find('/');
  if (slash != std::string::npos) {
    num = s.substr(0, slash);
    den = s.substr(slash + 1);
    if (den.empty()) throw InputError("not a number: '" + raw + "'");
  }
  double value;
  if (num.size() >= 2 && num.compare(num.size() - 2, 2, "pi") == 0) {
    std::string pre = num.substr(0, num.size() - 2);
    if (!pre.empty() && pre.back() == '*') pre.pop_back();
    if (pre.empty() || pre == "+") {
      value = kPi;
    } else if (pre == "-") {
      value = -kPi;
    } else {
      value = plain_number(pre, raw) * kPi;
    }
  } else {
    value = plain_number(num, raw);
  }
  if (!den.empty()) {
    const double d = plain_number(den, raw);
    if (d == 0.0) throw InputError("division by zero in '" + raw + "'");
    value /= d;
  }
  if (!std::isfinite(value)) throw InputError("not a finite number: '" + raw + "'");
  return value;
}

long long parse_integer(const std::string& raw) {
  const std::string s = trim(raw);
  long long v = 0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && s[0] == '+') ++first;
  auto res = std::from_chars(first, last, v);
  if (s.empty() || res.ec != std::errc() || res.ptr != last) {
    throw InputError("not an integer: '" + raw + "'");
  }
  return v;
}

int parse_int(const std::string& raw) {
  const long long v = parse_integer(raw);
  if (v < -1000000000LL || v > 1000000000LL) throw InputError("integer out of range: " + raw);
  return static_cast<int>(v);
}

VecR parse_vector(const std::string& raw) {
  std::vector<double> vals;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    vals.push_back(parse_real(item));
  }
  return Eigen::Map<VecR>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

std::string format_vector(const VecR& v) {
  std::string out;
  for (int i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_double(v[i]);
  }
  return out;
}

const char* shape_name(const Scenario& s) {
  switch (s.perturbation_shape) {
    case PerturbationShape::kExample1: return "example1";
    case PerturbationShape::kExample2: return "example2";
    case PerturbationShape::kBumps: return s.perturbation_coeffs.size() == 0 ? "none" : "bumps";
  }
  return "none";
}

PerturbationShape parse_shape(const std::string& raw) {
  const std::string s = trim(raw);
  if (s == "none" || s == "bumps") return PerturbationShape::kBumps;
  if (s == "example1") return PerturbationShape::kExample1;
  if (s == "example2") return PerturbationShape::kExample2;
  throw InputError("unknown perturbation shape '" + s + "'");
}

// ---------------------------------------------------------------- key table

struct Field {
  const char* section;
  const char* key;
  std::function<std::string(const Scenario&)> get;
  std::function<void(Scenario&, const std::string&)> set;
};

#define REAL_FIELD(sec, name)                                              \
  Field{sec, #name, [](const Scenario& s) { return format_double(s.name); }, \
        [](Scenario& s, const std::string& v) { s.name = parse_real(v); }}
#define INT_FIELD(sec, name)                                                    \
  Field{sec, #name, [](const Scenario& s) { return std::to_string(s.name); },   \
        [](Scenario& s, const std::string& v) { s.name = parse_int(v); }}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      Field{"scenario", "name", [](const Scenario& s) { return s.name; },
            [](Scenario& s, const std::string& v) { s.name = trim(v); }},
      REAL_FIELD("scenario", wavenumber),
      REAL_FIELD("scenario", noise_level),
      Field{"scenario", "seed", [](const Scenario& s) { return std::to_string(s.seed); },
            [](Scenario& s, const std::string& v) {
              const long long x = parse_integer(v);
              if (x < 0) throw InputError("seed must be non-negative");
              s.seed = static_cast<std::uint64_t>(x);
            }},
      REAL_FIELD("scenario", measurement_half_width),
      REAL_FIELD("scenario", measurement_step),
      REAL_FIELD("scenario", measurement_height),
      INT_FIELD("scenario", source_half_count),
      REAL_FIELD("scenario", source_spacing),
      REAL_FIELD("scenario", source_height),
      INT_FIELD("scenario", translation),
      REAL_FIELD("scenario", herglotz_lower),
      REAL_FIELD("scenario", herglotz_upper),

      Field{"truth", "periodic", [](const Scenario& s) { return format_vector(s.periodic); },
            [](Scenario& s, const std::string& v) { s.periodic = parse_vector(v); }},
      Field{"truth", "perturbation", [](const Scenario& s) { return std::string(shape_name(s)); },
            [](Scenario& s, const std::string& v) { s.perturbation_shape = parse_shape(v); }},
      INT_FIELD("truth", perturbation_cell),
      REAL_FIELD("truth", perturbation_scale),
      Field{"truth", "perturbation_coeffs",
            [](const Scenario& s) { return format_vector(s.perturbation_coeffs); },
            [](Scenario& s, const std::string& v) { s.perturbation_coeffs = parse_vector(v); }},
      REAL_FIELD("truth", strip_floor),
      REAL_FIELD("truth", strip_ceiling),
      REAL_FIELD("truth", flattening_height),

      INT_FIELD("discretization", mesh_n1),
      INT_FIELD("discretization", mesh_n2),
      INT_FIELD("discretization", order),
      INT_FIELD("discretization", truncation),
      INT_FIELD("discretization", fourier_modes),
      INT_FIELD("discretization", data_refinement),
      INT_FIELD("discretization", data_extra_cells),
      INT_FIELD("discretization", half_circle_nodes),
      INT_FIELD("discretization", sampling_m1),
      INT_FIELD("discretization", sampling_m2),
      REAL_FIELD("discretization", sampling_a),
      REAL_FIELD("discretization", sampling_b),
      REAL_FIELD("discretization", sampling_c),
      REAL_FIELD("discretization", sampling_d),

      INT_FIELD("inversion", periodic_size),
      INT_FIELD("inversion", bump_size),
      REAL_FIELD("inversion", epsilon),
      INT_FIELD("inversion", max_outer),
      INT_FIELD("inversion", max_halvings),
      REAL_FIELD("inversion", min_decrease),
      INT_FIELD("inversion", cgne_max_iterations),
      REAL_FIELD("inversion", cgne_tolerance),
      REAL_FIELD("inversion", cgne_discrepancy),
      Field{"inversion", "initial_guess",
            [](const Scenario& s) { return std::string(s.truth_initialization ? "truth" : "sampling"); },
            [](Scenario& s, const std::string& v) {
              if (v != "truth" && v != "sampling") {
                throw InputError("initial_guess must be 'sampling' or 'truth', got '" + v + "'");
              }
              s.truth_initialization = v == "truth";
            }},
  };
  return table;
}

#undef REAL_FIELD
#undef INT_FIELD

}  // namespace

// ---------------------------------------------------------------- scenario

Scenario parse_scenario(const std::string& text) {
  Scenario s;
  std::map<std::string, const Field*> index;
  for (const Field& f : fields()) index[std::string(f.section) + "." + f.key] = &f;
  std::map<std::string, int> seen;

  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw InputError(where + "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError(where + "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const std::string full = section + "." + key;
    auto it = index.find(full);
    if (it == index.end()) throw InputError(where + "unknown key '" + full + "'");
    if (seen[full]++) throw InputError(where + "duplicate key '" + full + "'");
    try {
      it->second->set(s, value);
    } catch (const InputError& e) {
      throw InputError(where + full + ": " + e.what());
    }
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  Scenario s = parse_scenario(ss.str());
  s.validate();
  return s;
}

std::string serialize_scenario(const Scenario& s) {
  std::string out;
  std::string section;
  for (const Field& f : fields()) {
    if (section != f.section) {
      if (!section.empty()) out += "\n";
      section = f.section;
      out += "[" + section + "]\n";
    }
    out += std::string(f.key) + " = " + f.get(s) + "\n";
  }
  return out;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string scenario_hash(const Scenario& s) { return fnv1a_hex(serialize_scenario(s)); }

bool Scenario::operator==(const Scenario& o) const {
  for (const Field& f : fields()) {
    if (f.get(*this) != f.get(o)) return false;
  }
  return perturbation_shape == o.perturbation_shape;
}

void Scenario::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw InputError(what);
  };
  need(wavenumber > 0.0, "wavenumber must be positive");
  need(noise_level >= 0.0, "noise_level must be non-negative");
  need(measurement_half_width > 0.0 && measurement_step > 0.0,
       "measurement_half_width and measurement_step must be positive");
  const double q = measurement_half_width / measurement_step;
  need(std::abs(q - std::round(q)) < 1e-6 && std::round(q) >= 1.0,
       "measurement_half_width must be a whole multiple of measurement_step");
  need(std::abs(measurement_height - strip_ceiling) < 1e-12,
       "measurement_height must equal strip_ceiling");
  need(source_half_count >= 0 && source_spacing > 0.0, "invalid point-source layout");
  need(source_height >= measurement_height, "point sources must lie on or above the measurement line");
  need(herglotz_lower < herglotz_upper, "herglotz_lower must be below herglotz_upper");
  need(periodic.size() >= 1, "truth.periodic needs at least one coefficient");
  need(strip_floor < strip_ceiling, "strip_floor must be below strip_ceiling");
  need(mesh_n1 >= 2 && mesh_n2 >= 1, "mesh too small");
  need(order == 1 || order == 2, "order must be 1 or 2");
  need(truncation >= 1, "truncation must be at least 1");
  need(fourier_modes >= 1, "fourier_modes must be positive");
  need(data_refinement >= 1 && data_extra_cells >= 0, "invalid data discretization");
  need(half_circle_nodes >= 1, "half_circle_nodes must be positive");
  need(sampling_c >= strip_floor && sampling_d < strip_ceiling,
       "sampling rectangle must lie inside the strip");
  sampling_grid().validate();
  const double reach = (2 * truncation + 1) * kPi;
  need(measurement_half_width < reach,
       "measurement line is longer than the truncated domain (raise truncation)");
  need(std::abs(kTwoPi * translation) < measurement_half_width,
       "translated incidence lies outside the measurement line");
  const int kd = truncation + data_extra_cells;
  need(std::abs(perturbation_cell) <= kd - 1, "perturbation cell outside the data domain");
  need(source_half_count * source_spacing < (2 * kd + 1) * kPi,
       "point sources outside the data domain");
  need(periodic_size >= 1 && bump_size >= 1, "coefficient space sizes must be positive");
  need(epsilon > 0.0 && max_outer >= 0 && max_halvings >= 0 && min_decrease >= 0.0,
       "invalid Newton settings");
  need(cgne_max_iterations >= 1 && cgne_tolerance > 0.0 && cgne_discrepancy > 0.0,
       "invalid CGNE settings");
  if (perturbation_shape != PerturbationShape::kBumps) {
    need(perturbation_coeffs.size() == 0, "perturbation_coeffs only apply to bumps");
  }
  const SurfaceModel m = truth();
  need(m.flattening_height() < strip_ceiling, "flattening_height must be below strip_ceiling");
  for (int i = 0; i <= 4000; ++i) {
    const double t = -kPi + kTwoPi * i / 4000.0;
    for (int cell : {0, perturbation_cell}) {
      const double z = m.height(t + kTwoPi * cell);
      need(z > strip_floor && z < m.flattening_height(),
           "truth surface leaves the band (strip_floor, flattening_height)");
    }
  }
  const double z0 = periodic[0];
  need(source_height > z0, "point sources must lie above the surface");
}

SurfaceModel Scenario::truth() const {
  PerturbationProfile p;
  if (perturbation_shape == PerturbationShape::kBumps) {
    p = perturbation_coeffs.size() == 0 ? PerturbationProfile::zero(0, perturbation_cell)
                                        : PerturbationProfile::bumps(perturbation_coeffs,
                                                                     perturbation_cell);
  } else {
    p = PerturbationProfile::analytic(perturbation_shape, perturbation_cell, perturbation_scale);
  }
  double h0 = flattening_height;
  if (h0 <= 0.0) {
    double top = -1e300;
    const PeriodicProfile per(periodic);
    for (int i = 0; i <= 4000; ++i) {
      const double t = -kPi + kTwoPi * i / 4000.0;
      top = std::max(top, per.value(t));
      top = std::max(top, per.value(t) + p.local_value(t));
    }
    h0 = SurfaceModel::default_flattening_height(strip_ceiling, top);
  }
  return SurfaceModel(PeriodicProfile(periodic), p, strip_floor, strip_ceiling, h0);
}

MeasurementLine Scenario::line() const {
  const int q = static_cast<int>(std::lround(measurement_half_width / measurement_step));
  return MeasurementLine{measurement_half_width, q, measurement_height};
}

SamplingGrid Scenario::sampling_grid() const {
  return SamplingGrid{sampling_a, sampling_b, sampling_c, sampling_d, sampling_m1, sampling_m2};
}

std::vector<Point> Scenario::sources() const {
  std::vector<Point> out;
  for (int j = -source_half_count; j <= source_half_count; ++j) {
    out.push_back(Point{j * source_spacing, source_height});
  }
  return out;
}

IncidentField Scenario::herglotz() const {
  HerglotzDensity g;
  g.lower = herglotz_lower;
  g.upper = herglotz_upper;
  return IncidentField::herglotz(wavenumber, g);
}

InversionModel Scenario::inversion_model() const {
  InversionModel m;
  m.wavenumber = wavenumber;
  m.floor = strip_floor;
  m.ceiling = strip_ceiling;
  // the inversion does not know the truth; keep the blend above the sampling box
  m.flattening_height = SurfaceModel::default_flattening_height(strip_ceiling, sampling_d);
  m.periodic_size = periodic_size;
  m.bump_size = bump_size;
  m.settings.n1 = mesh_n1;
  m.settings.n2 = mesh_n2;
  m.settings.order = order;
  m.settings.truncation = truncation;
  m.settings.fourier_modes = fourier_modes;
  m.line = line();
  return m;
}

NewtonConfig Scenario::newton_config() const {
  NewtonConfig c;
  c.epsilon = epsilon;
  c.max_outer = max_outer;
  c.max_halvings = max_halvings;
  c.min_decrease = min_decrease;
  c.noise_level = noise_level;
  c.cgne.max_iterations = cgne_max_iterations;
  c.cgne.tolerance = cgne_tolerance;
  c.cgne.discrepancy = cgne_discrepancy;
  return c;
}

ForwardSettings Scenario::data_settings() const {
  ForwardSettings f;
  f.n1 = mesh_n1 * data_refinement;
  f.n2 = mesh_n2 * data_refinement;
  f.order = order;
  f.truncation = truncation + data_extra_cells;
  f.fourier_modes = fourier_modes * data_refinement;
  return f;
}

// ---------------------------------------------------------------- synthesis

namespace {

constexpr std::uint64_t kSamplingStreams = 1;
constexpr std::uint64_t kHerglotzStreams = 2;

// stream = dataset·2³² + 2·record + component
std::uint64_t stream_id(std::uint64_t dataset, int record, int component) {
  return (dataset << 32) + 2 * static_cast<std::uint64_t>(record) + component;
}

VecC add_noise(const VecC& clean, double scale, std::uint64_t seed, std::uint64_t stream) {
  VecC out = clean;
  if (scale == 0.0) return out;
  for (int i = 0; i < clean.size(); ++i) {
    const auto [g1, g2] = random_normal_pair(seed, stream, static_cast<std::uint64_t>(i));
    out[i] += scale * cplx(g1, g2) / std::sqrt(2.0);
  }
  return out;
}

void finish_record(MeasurementRecord& r, const Scenario& s, std::uint64_t dataset, int index) {
  r.noise_scale_values = s.noise_level * r.clean.values.cwiseAbs().maxCoeff();
  r.noise_scale_normals = s.noise_level * r.clean.normals.cwiseAbs().maxCoeff();
  r.noisy = r.clean;
  r.noisy.values = add_noise(r.clean.values, r.noise_scale_values, s.seed,
                             stream_id(dataset, index, 0));
  r.noisy.normals = add_noise(r.clean.normals, r.noise_scale_normals, s.seed,
                              stream_id(dataset, index, 1));
}

}  // namespace

SimulationData synthesize_data(const Scenario& s) {
  s.validate();
  const SurfaceModel truth = s.truth();
  const ForwardSettings fs = s.data_settings();
  const CellMesh mesh(fs.n1, fs.n2, fs.order, truth.floor(), truth.ceiling());
  const AlphaGrid grid = AlphaGrid::avoiding_anomalies(fs.truncation, s.wavenumber);
  auto system = std::make_shared<const PeriodicSystem>(truth, s.wavenumber, mesh, grid,
                                                       fs.fourier_modes);
  const MeasurementLine line = s.line();

  SimulationData out;
  out.frame_cell = truth.perturbation().cell_index();
  const std::vector<Point> src = s.sources();
  const int ns = static_cast<int>(src.size());
  out.sampling.resize(ns);
  out.herglotz.resize(2);

  // Herglotz data live in the frame centred on the perturbed cell; an
  // integer-period shift leaves the periodic factorization valid.
  const SurfaceModel framed = translate_model(truth, out.frame_cell);
  const ScatteringProblem sampling_problem(system, truth, fs);
  const ScatteringProblem framed_problem(system, framed, fs);
  const double reference = s.periodic[0];

  parallel_for(ns + 2, [&](int i) {
    if (i < ns) {
      MeasurementRecord& r = out.sampling[i];
      r.label = "source_" + std::to_string(i - s.source_half_count);
      r.incident = IncidentField::point_source(s.wavenumber, src[i]);
      TruncationReport rep;
      r.clean = sampling_problem.scattered_trace(sampling_problem.solve(r.incident, reference),
                                                 r.incident, line, reference, &rep);
      r.edge_fraction = rep.edge_fraction;
      finish_record(r, s, kSamplingStreams, i);
    } else {
      const int h = i - ns;
      MeasurementRecord& r = out.herglotz[h];
      r.label = h == 0 ? "U0" : "UL";
      r.incident = h == 0 ? s.herglotz() : s.herglotz().shifted(kTwoPi * s.translation);
      TruncationReport rep;
      r.clean = framed_problem.scattered_trace(framed_problem.solve(r.incident), r.incident,
                                               line, 0.0, &rep);
      r.edge_fraction = rep.edge_fraction;
      finish_record(r, s, kHerglotzStreams, h);
    }
  });
  return out;
}

// ---------------------------------------------------------------- files

namespace {

const std::vector<std::string> kDataColumns = {
    "record", "x1", "u_re", "u_im", "du_re", "du_im",
    "u_clean_re", "u_clean_im", "du_clean_re", "du_clean_im"};

json incident_json(const IncidentField& f) {
  json j;
  switch (f.kind) {
    case IncidentKind::kPointSource:
      j["kind"] = "point_source";
      j["y1"] = f.source.x1;
      j["y2"] = f.source.x2;
      break;
    case IncidentKind::kHerglotz:
      j["kind"] = "herglotz";
      j["shift"] = f.shift;
      j["lower"] = f.density.lower;
      j["upper"] = f.density.upper;
      break;
    case IncidentKind::kPlaneWave:
      j["kind"] = "plane_wave";
      j["angle"] = f.angle;
      break;
  }
  j["wavenumber"] = f.wavenumber;
  return j;
}

json provenance(const Scenario& s) {
  json j;
  j["scenario_hash"] = scenario_hash(s);
  j["seed"] = s.seed;
  return j;
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  const std::string path = (std::filesystem::path(dir) / name).string();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  return out;
}

void write_records(const Scenario& s, const SimulationData& data, const std::string& dir,
                   const std::string& dataset, const std::vector<MeasurementRecord>& records) {
  const MeasurementLine line = s.line();
  const ForwardSettings fs = s.data_settings();
  json h = provenance(s);
  h["format"] = "perisurf-cauchy-data";
  h["version"] = 1;
  h["dataset"] = dataset;
  h["noise_model"] =
      "sigma*max|u|*(g1+i*g2)/sqrt(2); g from SplitMix64 counter generator + Box-Muller";
  h["noise_level"] = s.noise_level;
  h["frame_cell"] = dataset == "herglotz" ? data.frame_cell : 0;
  h["measurement"] = {{"half_width", line.half_width},
                      {"half_count", line.half_count},
                      {"height", line.height}};
  h["data_mesh"] = {fs.n1, fs.n2, fs.order};
  h["data_truncation"] = fs.truncation;
  h["columns"] = kDataColumns;
  json recs = json::array();
  for (const MeasurementRecord& r : records) {
    recs.push_back({{"label", r.label},
                    {"incident", incident_json(r.incident)},
                    {"noise_scale_values", r.noise_scale_values},
                    {"noise_scale_normals", r.noise_scale_normals},
                    {"edge_fraction", r.edge_fraction}});
  }
  h["records"] = recs;

  std::ofstream out = open_out(dir, dataset + ".csv");
  out << "# " << h.dump() << "\n";
  for (size_t c = 0; c < kDataColumns.size(); ++c) out << (c ? "," : "") << kDataColumns[c];
  out << "\n";
  for (size_t r = 0; r < records.size(); ++r) {
    const MeasurementRecord& m = records[r];
    for (int i = 0; i < m.noisy.values.size(); ++i) {
      out << r << "," << format_double(m.noisy.points[i]) << ","
          << format_double(m.noisy.values[i].real()) << ","
          << format_double(m.noisy.values[i].imag()) << ","
          << format_double(m.noisy.normals[i].real()) << ","
          << format_double(m.noisy.normals[i].imag()) << ","
          << format_double(m.clean.values[i].real()) << ","
          << format_double(m.clean.values[i].imag()) << ","
          << format_double(m.clean.normals[i].real()) << ","
          << format_double(m.clean.normals[i].imag()) << "\n";
    }
  }
  if (!out) throw InputError("write failed in '" + dir + "'");
}

struct CsvFile {
  json header;
  std::vector<std::vector<double>> rows;
};

CsvFile read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path + "'");
  CsvFile f;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0) {
    throw InputError(path + ": missing '# {json}' header");
  }
  try {
    f.header = json::parse(line.substr(2));
  } catch (const json::exception& e) {
    throw InputError(path + ": bad header: " + e.what());
  }
  if (!std::getline(in, line)) throw InputError(path + ": missing column line");
  int lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(plain_number(cell, cell));
    if (row.size() != kDataColumns.size()) {
      throw InputError(path + ": line " + std::to_string(lineno) + " has the wrong column count");
    }
    f.rows.push_back(std::move(row));
  }
  return f;
}

IncidentField incident_from_json(const json& j) {
  const std::string kind = j.at("kind");
  const double k = j.at("wavenumber");
  if (kind == "point_source") return IncidentField::point_source(k, Point{j.at("y1"), j.at("y2")});
  if (kind == "herglotz") {
    HerglotzDensity g;
    g.lower = j.at("lower");
    g.upper = j.at("upper");
    return IncidentField::herglotz(k, g, j.at("shift"));
  }
  throw InputError("unsupported incident kind '" + kind + "' in data file");
}

std::vector<MeasurementRecord> read_records(const Scenario& s, const std::string& path,
                                            const std::string& dataset, int* frame_cell) {
  const CsvFile f = read_csv(path);
  const MeasurementLine line = s.line();
  try {
    if (f.header.at("format") != "perisurf-cauchy-data" || f.header.at("dataset") != dataset) {
      throw InputError(path + ": not a " + dataset + " data file");
    }
    const json& m = f.header.at("measurement");
    if (m.at("half_count").get<int>() != line.half_count ||
        std::abs(m.at("half_width").get<double>() - line.half_width) > 1e-12 * line.half_width ||
        std::abs(m.at("height").get<double>() - line.height) > 1e-12) {
      throw InputError(path + ": measurement line differs from the configuration");
    }
    if (frame_cell) *frame_cell = f.header.at("frame_cell");
    std::vector<MeasurementRecord> out;
    for (const json& r : f.header.at("records")) {
      MeasurementRecord rec;
      rec.label = r.at("label");
      rec.incident = incident_from_json(r.at("incident"));
      if (std::abs(rec.incident.wavenumber - s.wavenumber) > 1e-12 * s.wavenumber) {
        throw InputError(path + ": wavenumber differs from the configuration");
      }
      rec.noise_scale_values = r.at("noise_scale_values");
      rec.noise_scale_normals = r.at("noise_scale_normals");
      rec.edge_fraction = r.at("edge_fraction");
      for (CauchyData* cd : {&rec.clean, &rec.noisy}) {
        cd->height = line.height;
        cd->values = VecC::Zero(line.size());
        cd->normals = VecC::Zero(line.size());
        cd->points.assign(line.size(), 0.0);
      }
      out.push_back(std::move(rec));
    }
    std::vector<int> filled(out.size(), 0);
    for (const auto& row : f.rows) {
      const int r = static_cast<int>(row[0]);
      if (r < 0 || r >= static_cast<int>(out.size()) || row[0] != r) {
        throw InputError(path + ": bad record index");
      }
      const int i = filled[r]++;
      if (i >= line.size()) throw InputError(path + ": too many samples in a record");
      MeasurementRecord& rec = out[r];
      rec.noisy.points[i] = rec.clean.points[i] = row[1];
      rec.noisy.values[i] = cplx(row[2], row[3]);
      rec.noisy.normals[i] = cplx(row[4], row[5]);
      rec.clean.values[i] = cplx(row[6], row[7]);
      rec.clean.normals[i] = cplx(row[8], row[9]);
    }
    for (int n : filled) {
      if (n != line.size()) throw InputError(path + ": incomplete record");
    }
    return out;
  } catch (const json::exception& e) {
    throw InputError(path + ": bad header: " + e.what());
  }
}

}  // namespace

void write_data(const Scenario& s, const SimulationData& data, const std::string& dir) {
  {
    std::ofstream out = open_out(dir, "scenario.ini");
    out << serialize_scenario(s);
  }
  write_records(s, data, dir, "sampling", data.sampling);
  write_records(s, data, dir, "herglotz", data.herglotz);
}

SimulationData read_data(const Scenario& s, const std::string& dir) {
  s.validate();
  const std::filesystem::path base(dir);
  SimulationData d;
  d.sampling = read_records(s, (base / "sampling.csv").string(), "sampling", nullptr);
  d.herglotz = read_records(s, (base / "herglotz.csv").string(), "herglotz", &d.frame_cell);
  if (d.herglotz.size() != 2) throw InputError("herglotz.csv must hold the records U0 and UL");
  if (d.sampling.empty()) throw InputError("sampling.csv holds no records");
  return d;
}

// ---------------------------------------------------------------- pipeline

SamplingOutcome run_sampling(const Scenario& s, const SimulationData& data) {
  SamplingOutcome out;
  out.grid = s.sampling_grid();
  std::vector<CauchyData> cauchy;
  std::vector<Point> src;
  for (const MeasurementRecord& r : data.sampling) {
    if (r.incident.kind != IncidentKind::kPointSource) {
      throw InputError("sampling data must come from point sources");
    }
    cauchy.push_back(r.noisy);
    src.push_back(r.incident.source);
  }
  out.matrix = indicator_matrix(out.grid, cauchy, src, s.half_circle_nodes, s.wavenumber);
  out.c0 = estimate_c0(out.matrix, out.grid);
  out.cell = estimate_J(out.matrix, out.grid, &out.location);
  return out;
}

namespace {

double max_abs_diff(const std::function<double(double)>& a, const std::function<double(double)>& b,
                    double* scale) {
  double err = 0.0, m = 0.0;
  for (int i = 0; i <= 2000; ++i) {
    const double t = -kPi + kTwoPi * i / 2000.0;
    err = std::max(err, std::abs(a(t) - b(t)));
    m = std::max(m, std::abs(a(t)));
  }
  *scale = m;
  return err;
}

}  // namespace

VecR project_on_bumps(const PerturbationProfile& p, int size) {
  if (p.is_zero()) return VecR::Zero(size);
  if (p.shape() == PerturbationShape::kBumps && p.size() == size) return p.coeffs();
  // least squares on a dense cell-local grid
  const int n = 1024;
  Eigen::MatrixXd A(n, size);
  VecR b(n);
  for (int i = 0; i < n; ++i) {
    const double t = -kPi + kTwoPi * (i + 0.5) / n;
    b[i] = p.local_value(t);
    for (int j = 0; j < size; ++j) A(i, j) = PerturbationProfile::bump(j, size, t);
  }
  return A.colPivHouseholderQr().solve(b);
}

PipelineOutcome run_pipeline(const Scenario& s, const SimulationData& data,
                             const StageLogger& log) {
  PipelineOutcome out;
  out.sampling = run_sampling(s, data);
  const int J = out.sampling.cell;
  if (J != data.frame_cell) {
    throw AmbiguousLocation("sampling located the perturbation in cell " + std::to_string(J) +
                            " but the Herglotz data were recorded about cell " +
                            std::to_string(data.frame_cell));
  }
  const InversionModel model = s.inversion_model();
  NewtonConfig cfg = s.newton_config();

  VecR C0 = VecR::Zero(s.periodic_size);
  VecR D0 = VecR::Zero(s.bump_size);
  if (s.truth_initialization) {
    const SurfaceModel framed = translate_model(s.truth(), J);
    const int m = std::min<int>(s.periodic_size, framed.periodic().size());
    C0.head(m) = framed.periodic().coeffs().head(m);
    D0 = project_on_bumps(framed.perturbation(), s.bump_size);
  } else {
    C0[0] = out.sampling.c0;
  }

  if (log) cfg.observer = [&](const IterationRecord& r, const VecR&) { log("part1", r); };
  out.part1 = newton_part1(model, data.herglotz[1].incident, data.herglotz[1].noisy.values, C0,
                           D0, cfg);
  out.C = out.part1.coeffs;
  if (log) cfg.observer = [&](const IterationRecord& r, const VecR&) { log("part2", r); };
  out.part2 = newton_part2(model, data.herglotz[0].incident, data.herglotz[0].noisy.values, out.C,
                           D0, cfg);
  out.D = out.part2.coeffs;

  const SurfaceModel framed = translate_model(s.truth(), J);
  const PeriodicProfile rec(out.C);
  double scale = 0.0;
  const double ez = max_abs_diff([&](double t) { return framed.periodic().value(t); },
                                 [&](double t) { return rec.value(t); }, &scale);
  out.periodic_error = ez / scale;
  const PerturbationProfile prec = PerturbationProfile::bumps(out.D, 0);
  const double ep = max_abs_diff([&](double t) { return framed.perturbation().value(t); },
                                 [&](double t) { return prec.value(t); }, &scale);
  out.perturbation_error = scale > 0.0 ? ep / scale : 0.0;
  return out;
}

Eigen::MatrixXd reconstruction_curve(const Scenario& s, const PipelineOutcome& out, int count) {
  if (count < 2) throw InputError("a curve needs at least two samples");
  const SurfaceModel framed = translate_model(s.truth(), out.sampling.cell);
  const PeriodicProfile rec(out.C);
  const PerturbationProfile prec = PerturbationProfile::bumps(out.D, 0);
  Eigen::MatrixXd m(count, 5);
  for (int i = 0; i < count; ++i) {
    const double t = -kPi + kTwoPi * i / (count - 1);
    m(i, 0) = t;
    m(i, 1) = framed.periodic().value(t);
    m(i, 2) = rec.value(t);
    m(i, 3) = framed.perturbation().value(t);
    m(i, 4) = prec.value(t);
  }
  return m;
}

// ---------------------------------------------------------------- artifacts

namespace {

void write_table(std::ofstream& out, json header, const std::vector<std::string>& cols,
                 const Eigen::MatrixXd& rows) {
  header["columns"] = cols;
  out << "# " << header.dump() << "\n";
  for (size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
  out << "\n";
  for (int i = 0; i < rows.rows(); ++i) {
    for (int c = 0; c < rows.cols(); ++c) out << (c ? "," : "") << format_double(rows(i, c));
    out << "\n";
  }
}

json stage_json(const StageResult& r) {
  json j;
  j["status"] = status_name(r.status);
  j["outer_iterations"] = r.history.size();
  j["initial_residual"] = r.initial_residual;
  j["final_residual"] = r.final_residual;
  j["coefficients"] = std::vector<double>(r.coeffs.data(), r.coeffs.data() + r.coeffs.size());
  return j;
}

}  // namespace

void write_indicator(const Scenario& s, const SamplingOutcome& o, const std::string& dir) {
  const SamplingGrid& g = o.grid;
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(g.m1) * g.m2, 5);
  for (int i = 0; i < g.m1; ++i) {
    for (int j = 0; j < g.m2; ++j) {
      const Eigen::Index r = static_cast<Eigen::Index>(i) * g.m2 + j;
      rows.row(r) << i, j, g.z1(i), g.z2(j), o.matrix.values(i, j);
    }
  }
  json h = provenance(s);
  h["format"] = "perisurf-indicator";
  std::ofstream out = open_out(dir, "indicator.csv");
  write_table(out, h, {"row", "col", "z1", "z2", "value"}, rows);

  Eigen::MatrixXd ridge(g.m1, 2);
  for (int i = 0; i < g.m1; ++i) ridge.row(i) << g.z1(i), g.z2(o.matrix.argmax[i] - 1);
  h["format"] = "perisurf-ridge";
  std::ofstream rout = open_out(dir, "ridge.csv");
  write_table(rout, h, {"z1", "z2_max"}, ridge);
}

void write_sampling_report(const Scenario& s, const SamplingOutcome& o, const std::string& dir) {
  json j = provenance(s);
  j["format"] = "perisurf-sampling-report";
  j["J"] = o.cell;
  j["c0"] = o.c0;
  j["cells"] = o.location.cells;
  j["deviations"] = o.location.deviations;
  std::ofstream out = open_out(dir, "sampling_report.json");
  out << j.dump(2) << "\n";
}

void write_inversion(const Scenario& s, const PipelineOutcome& o, const std::string& dir) {
  json h = provenance(s);
  h["format"] = "perisurf-reconstruction";
  h["frame_cell"] = o.sampling.cell;
  {
    std::ofstream out = open_out(dir, "reconstruction.csv");
    write_table(out, h, {"t", "zeta_truth", "zeta_rec", "p_truth", "p_rec"},
                reconstruction_curve(s, o));
  }
  {
    Eigen::MatrixXd rows(o.part1.history.size() + o.part2.history.size(), 6);
    int r = 0;
    for (int stage = 1; stage <= 2; ++stage) {
      for (const IterationRecord& it : (stage == 1 ? o.part1 : o.part2).history) {
        rows.row(r++) << stage, it.iteration, it.residual, it.step_norm, it.inner_iterations,
            it.halvings;
      }
    }
    h["format"] = "perisurf-residuals";
    std::ofstream out = open_out(dir, "residuals.csv");
    write_table(out, h, {"stage", "iteration", "residual", "step_norm", "inner_iterations",
                         "halvings"},
                rows);
  }
  json j = provenance(s);
  j["format"] = "perisurf-inversion-report";
  j["J"] = o.sampling.cell;
  j["c0"] = o.sampling.c0;
  j["part1"] = stage_json(o.part1);
  j["part2"] = stage_json(o.part2);
  j["periodic_error"] = o.periodic_error;
  j["perturbation_error"] = o.perturbation_error;
  std::ofstream out = open_out(dir, "inversion_report.json");
  out << j.dump(2) << "\n";
}

}  // namespace perisurf
