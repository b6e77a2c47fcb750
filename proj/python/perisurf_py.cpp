// Python bindings: scenarios, the three pipeline commands, oracles and a few
// numerical building blocks.

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "perisurf/errors.hpp"
#include "perisurf/inversion.hpp"
#include "perisurf/oracles.hpp"
#include "perisurf/rng.hpp"
#include "perisurf/scenario.hpp"
#include "perisurf/special.hpp"

namespace py = pybind11;
using namespace perisurf;

namespace {

py::dict stage_dict(const StageResult& r) {
  py::list history;
  for (const IterationRecord& h : r.history) {
    py::dict row;
    row["iteration"] = h.iteration;
    row["residual"] = h.residual;
    row["step_norm"] = h.step_norm;
    row["inner_iterations"] = h.inner_iterations;
    row["halvings"] = h.halvings;
    history.append(row);
  }
  py::dict d;
  d["status"] = status_name(r.status);
  d["coeffs"] = r.coeffs;
  d["initial_residual"] = r.initial_residual;
  d["final_residual"] = r.final_residual;
  d["history"] = history;
  return d;
}

py::dict sampling_dict(const SamplingOutcome& o) {
  py::dict d;
  d["J"] = o.cell;
  d["c0"] = o.c0;
  d["indicator"] = o.matrix.values;
  d["argmax"] = o.matrix.argmax;
  d["cells"] = o.location.cells;
  d["deviations"] = o.location.deviations;
  return d;
}

}  // namespace

PYBIND11_MODULE(perisurf, m) {
  m.doc() = "Scattering by locally perturbed periodic surfaces and its inversion";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InputError>(m, "InputError", error.ptr());
  py::register_exception<AmbiguousLocation>(m, "AmbiguousLocation", error.ptr());
  py::register_exception<SingularPoint>(m, "SingularPoint", error.ptr());

  py::class_<Scenario>(m, "Scenario")
      .def(py::init<>())
      .def_readwrite("name", &Scenario::name)
      .def_readwrite("wavenumber", &Scenario::wavenumber)
      .def_readwrite("noise_level", &Scenario::noise_level)
      .def_readwrite("seed", &Scenario::seed)
      .def_readwrite("measurement_half_width", &Scenario::measurement_half_width)
      .def_readwrite("measurement_step", &Scenario::measurement_step)
      .def_readwrite("source_half_count", &Scenario::source_half_count)
      .def_readwrite("source_spacing", &Scenario::source_spacing)
      .def_readwrite("translation", &Scenario::translation)
      .def_readwrite("periodic", &Scenario::periodic)
      .def_readwrite("perturbation_cell", &Scenario::perturbation_cell)
      .def_readwrite("mesh_n1", &Scenario::mesh_n1)
      .def_readwrite("mesh_n2", &Scenario::mesh_n2)
      .def_readwrite("truncation", &Scenario::truncation)
      .def_readwrite("sampling_m1", &Scenario::sampling_m1)
      .def_readwrite("sampling_m2", &Scenario::sampling_m2)
      .def_readwrite("periodic_size", &Scenario::periodic_size)
      .def_readwrite("bump_size", &Scenario::bump_size)
      .def_readwrite("epsilon", &Scenario::epsilon)
      .def_readwrite("truth_initialization", &Scenario::truth_initialization)
      .def("validate", &Scenario::validate)
      .def("serialize", [](const Scenario& s) { return serialize_scenario(s); })
      .def("hash", [](const Scenario& s) { return scenario_hash(s); })
      .def("__eq__", [](const Scenario& a, const Scenario& b) { return a == b; })
      .def("__repr__", [](const Scenario& s) {
        return "<perisurf.Scenario '" + s.name + "' " + scenario_hash(s) + ">";
      });

  m.def("parse_scenario", &parse_scenario, py::arg("text"));
  m.def("load_scenario", &load_scenario, py::arg("path"));

  m.def(
      "simulate",
      [](const Scenario& s, const std::string& out) {
        SimulationData data;
        {
          py::gil_scoped_release release;
          data = synthesize_data(s);
          write_data(s, data, out);
        }
        py::dict d;
        d["sampling_records"] = data.sampling.size();
        d["herglotz_records"] = data.herglotz.size();
        d["frame_cell"] = data.frame_cell;
        d["scenario_hash"] = scenario_hash(s);
        return d;
      },
      py::arg("scenario"), py::arg("out"), "Synthesize noisy Cauchy data into `out`.");

  m.def(
      "sample",
      [](const Scenario& s, const std::string& data_dir, const std::string& out) {
        SamplingOutcome o;
        {
          py::gil_scoped_release release;
          o = run_sampling(s, read_data(s, data_dir));
          write_indicator(s, o, out);
          write_sampling_report(s, o, out);
        }
        return sampling_dict(o);
      },
      py::arg("scenario"), py::arg("data"), py::arg("out"),
      "Indicator matrix and the initial guess (J, c0).");

  m.def(
      "invert",
      [](const Scenario& s, const std::string& data_dir, const std::string& out) {
        PipelineOutcome o;
        {
          py::gil_scoped_release release;
          o = run_pipeline(s, read_data(s, data_dir));
          write_indicator(s, o.sampling, out);
          write_sampling_report(s, o.sampling, out);
          write_inversion(s, o, out);
        }
        py::dict d;
        d["sampling"] = sampling_dict(o.sampling);
        d["part1"] = stage_dict(o.part1);
        d["part2"] = stage_dict(o.part2);
        d["C"] = o.C;
        d["D"] = o.D;
        d["periodic_error"] = o.periodic_error;
        d["perturbation_error"] = o.perturbation_error;
        d["curve"] = reconstruction_curve(s, o);
        return d;
      },
      py::arg("scenario"), py::arg("data"), py::arg("out"),
      "Sampling followed by both Newton-CG stages.");

  m.def(
      "verify",
      [](bool quick) {
        py::list out;
        for (const OracleCheck& c : run_oracles(quick)) {
          py::dict d;
          d["name"] = c.name;
          d["passed"] = c.passed;
          d["value"] = c.value;
          d["tolerance"] = c.tolerance;
          d["detail"] = c.detail;
          out.append(d);
        }
        return out;
      },
      py::arg("quick") = true);

  m.def(
      "hankel1_01",
      [](double x) {
        cplx h0, h1;
        hankel1_01(x, h0, h1);
        return py::make_tuple(h0, h1);
      },
      py::arg("x"), "H₀⁽¹⁾(x) and H₁⁽¹⁾(x) for x > 0.");

  m.def("random_normal_pair", &random_normal_pair, py::arg("seed"), py::arg("stream"),
        py::arg("index"));

  m.def(
      "cgne_dense",
      [](const Eigen::MatrixXcd& A, const VecC& b, const VecR& weights, int max_iterations,
         double tolerance) {
        CgneConfig cfg;
        cfg.max_iterations = max_iterations;
        cfg.tolerance = tolerance;
        const VecR w = weights.size() ? weights : VecR::Ones(b.size());
        const CgneResult r = cgne_solve(
            [&](const VecR& x) { return VecC(A * x.cast<cplx>()); },
            [&](const VecC& y) {
              return VecR((A.adjoint() * w.cast<cplx>().cwiseProduct(y)).real());
            },
            b, static_cast<int>(A.cols()), w, cfg);
        return py::make_tuple(r.solution, r.iterations, r.residuals);
      },
      py::arg("A"), py::arg("b"), py::arg("weights") = VecR(), py::arg("max_iterations") = 50,
      py::arg("tolerance") = 1e-12,
      "CGNE for real unknowns x minimizing Σ wᵢ|(Ax − b)ᵢ|².");
}
