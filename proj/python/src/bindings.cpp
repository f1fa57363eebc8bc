#include "vortex/config.hpp"
#include "vortex/continuity.hpp"
#include "vortex/errors.hpp"
#include "vortex/linearization.hpp"
#include "vortex/positivity.hpp"
#include "vortex/run.hpp"

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <string>

namespace py = pybind11;
using namespace vortex;

namespace {

// pybind11 holders cannot point to const; the solver only sees const views.
using PyGrid = std::shared_ptr<TorusGrid>;
using PySection = std::shared_ptr<SectionData>;

PyGrid holder(const GridPtr& g) { return std::const_pointer_cast<TorusGrid>(g); }
PySection holder(const SectionPtr& s) { return std::const_pointer_cast<SectionData>(s); }

using Array2 = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Fields cross the boundary as n x n arrays indexed [x, y].
Array2 to_numpy(const ScalarField& f) {
  const int n = f.grid().n();
  Array2 out({n, n});
  std::copy(f.values().data(), f.values().data() + f.values().size(), out.mutable_data());
  return out;
}

ScalarField from_numpy(const GridPtr& grid, const Array2& a) {
  if (a.ndim() != 2 || a.shape(0) != grid->n() || a.shape(1) != grid->n())
    throw GridMismatch("expected a " + std::to_string(grid->n()) + " x " + std::to_string(grid->n()) + " array");
  Eigen::ArrayXd v(grid->size());
  std::copy(a.data(), a.data() + v.size(), v.data());
  return ScalarField(grid, std::move(v));
}

SystemKind parse_system(const std::string& s) {
  if (s == "sys1") return SystemKind::sys1;
  if (s == "sys2") return SystemKind::sys2;
  throw ConfigError("system must be 'sys1' or 'sys2', got '" + s + "'");
}

OperatorTag parse_tag(const std::string& s) {
  for (OperatorTag t : {OperatorTag::sys1_psi, OperatorTag::sys1_f, OperatorTag::sys2_coupled, OperatorTag::s_path})
    if (to_string(t) == s) return t;
  throw ConfigError("unknown operator '" + s + "'");
}

py::dict step_dict(const PathStep& s) {
  py::dict d;
  d["t"] = s.t;
  d["dt"] = s.dt;
  d["newton_iterations"] = s.newton_iterations;
  d["kappa"] = s.kappa;
  d["residual_f"] = s.residual_f;
  d["residual_psi"] = s.residual_psi;
  d["psi_min"] = s.psi_min;
  d["psi_max"] = s.psi_max;
  d["lap_psi_min"] = s.lap_psi_min;
  d["lap_psi_max"] = s.lap_psi_max;
  d["branch_margin"] = s.branch_margin;
  d["det_a_min"] = s.det_a_min;
  d["bounds_passed"] = s.bounds.passed();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Continuity-method solver for the reduced vortex-bundle systems";

  static py::exception<Error> error_type(m, "VortexError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::handle(error_type.ptr())(e.kind() + ": " + e.what());
      exc.attr("kind") = e.kind();
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  m.attr("SUMMARY_SCHEMA_VERSION") = kSummarySchemaVersion;

  py::class_<TorusGrid, PyGrid>(m, "Grid")
      .def(py::init([](int n, int deg_l) { return holder(TorusGrid::create(n, deg_l)); }),
           py::arg("n"), py::arg("deg_l") = 1)
      .def_property_readonly("n", &TorusGrid::n)
      .def_property_readonly("deg_l", &TorusGrid::deg_l)
      .def_property_readonly("total_area", &TorusGrid::total_area)
      .def("field", [](const PyGrid& g, const Array2& a) { return to_numpy(from_numpy(g, a)); })
      .def("coordinates", [](const PyGrid& g) {
        const int n = g->n();
        Array2 x({n, n}), y({n, n});
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            x.mutable_at(i, j) = g->x(i);
            y.mutable_at(i, j) = g->y(j);
          }
        return py::make_tuple(x, y);
      });

  m.def("laplacian", [](const PyGrid& g, const Array2& u) { return to_numpy(laplacian(from_numpy(g, u))); });
  m.def("poisson_solve", [](const PyGrid& g, const Array2& rhs, double mean, double tol) {
        return to_numpy(poisson_solve(from_numpy(g, rhs), mean, tol));
      }, py::arg("grid"), py::arg("rhs"), py::arg("mean") = 0.0, py::arg("compat_tol") = kDefaultCompatTol);
  m.def("omega_mean", [](const PyGrid& g, const Array2& u) { return omega_mean(from_numpy(g, u)); });
  m.def("resample", [](const PyGrid& from, const Array2& u, const PyGrid& to) {
    return to_numpy(resample(from_numpy(from, u), to));
  });

  py::class_<SectionData, PySection>(m, "Section")
      .def_property_readonly("phik2", [](const SectionData& s) { return to_numpy(s.phik2); })
      .def_readonly("rescale_factor", &SectionData::rescale_factor)
      .def_readonly("theta_terms", &SectionData::theta_terms)
      .def("curvature_defect", [](const SectionData& s) { return section_curvature_defect(s); });
  m.def("theta_section", [](const PyGrid& g) { return std::make_shared<SectionData>(build_theta_section(g)); });
  m.def("zero_section", [](const PyGrid& g) { return std::make_shared<SectionData>(zero_section(g)); });

  py::class_<VortexParams>(m, "Params")
      .def(py::init([](int r1, int r2, double alpha, double epsilon, double t, int deg_l) {
             VortexParams p{r1, r2, alpha, epsilon, t, deg_l};
             p.validate();
             return p;
           }),
           py::arg("r1") = 1, py::arg("r2") = 1, py::arg("alpha") = 0.0, py::arg("epsilon") = 1.0,
           py::arg("t") = 0.0, py::arg("deg_l") = 1)
      .def_readwrite("r1", &VortexParams::r1)
      .def_readwrite("r2", &VortexParams::r2)
      .def_readwrite("alpha", &VortexParams::alpha)
      .def_readwrite("epsilon", &VortexParams::epsilon)
      .def_readwrite("t", &VortexParams::t)
      .def_readwrite("deg_l", &VortexParams::deg_l)
      .def("at", &VortexParams::at)
      .def("__repr__", [](const VortexParams& p) {
        return "Params(r1=" + std::to_string(p.r1) + ", r2=" + std::to_string(p.r2) + ", alpha=" + format_double(p.alpha) +
               ", epsilon=" + format_double(p.epsilon) + ", t=" + format_double(p.t) + ")";
      });

  py::class_<SolverConfig>(m, "SolverConfig")
      .def(py::init<>())
      .def_readwrite("newton_tol", &SolverConfig::newton_tol)
      .def_readwrite("max_newton", &SolverConfig::max_newton)
      .def_readwrite("dt0", &SolverConfig::dt0)
      .def_readwrite("dt_min", &SolverConfig::dt_min)
      .def_readwrite("dt_max", &SolverConfig::dt_max)
      .def("validate", &SolverConfig::validate);

  py::class_<MetricState>(m, "State")
      .def(py::init([](const Array2& f, const Array2& psi, const PySection& s) {
        const GridPtr& g = s->phik2.grid_ptr();
        return MetricState(from_numpy(g, f), from_numpy(g, psi), s);
      }))
      .def_property_readonly("f", [](const MetricState& s) { return to_numpy(s.f()); })
      .def_property_readonly("psi", [](const MetricState& s) { return to_numpy(s.psi()); })
      .def_property_readonly("lap_f", [](const MetricState& s) { return to_numpy(s.lap_f()); })
      .def_property_readonly("lap_psi", [](const MetricState& s) { return to_numpy(s.lap_psi()); })
      .def_property_readonly("phig2", [](const MetricState& s) { return to_numpy(s.phig2()); })
      .def_property_readonly("grid", [](const MetricState& s) { return holder(s.grid()); });

  m.def("residual_sys1_psi", [](const MetricState& s, const VortexParams& p) { return to_numpy(residual_sys1_psi(s, p)); });
  m.def("residual_sys2_psi", [](const MetricState& s, const VortexParams& p) { return to_numpy(residual_sys2_psi(s, p)); });
  m.def("determinant_lhs", [](const MetricState& s, const VortexParams& p) { return to_numpy(determinant_lhs(s, p)); });

  m.def("solve_t0", [](const std::string& system, const VortexParams& p, const PySection& s, const SolverConfig& cfg) {
        return solve_t0(parse_system(system), p, s, cfg);
      }, py::arg("system"), py::arg("params"), py::arg("section"), py::arg("config") = SolverConfig{});

  m.def("fd_check", [](const MetricState& s, const VortexParams& p, const std::string& op, int probes, std::uint64_t seed) {
        return fd_check(s, p, parse_tag(op), probes, seed);
      }, py::arg("state"), py::arg("params"), py::arg("operator"), py::arg("n_probes") = 20, py::arg("seed") = 0);

  m.def("positivity", [](const MetricState& s, const VortexParams& p, int n_samples, std::uint64_t seed) {
        const PositivityReport r = positivity_check(curvature_coeffs(s, p, p.shift()), n_samples, seed);
        py::dict d;
        d["passed"] = r.passed();
        d["min_diagonal"] = r.min_diagonal;
        d["min_dual_nakano"] = r.min_dual_nakano;
        d["min_griffiths_h11"] = r.min_griffiths_h11;
        d["min_griffiths_det"] = r.min_griffiths_det;
        return d;
      }, py::arg("state"), py::arg("params"), py::arg("n_samples") = 64, py::arg("seed") = 0);

  // Solves one system end to end and returns the resolved parameters, the
  // per-step trace and the endpoint state.
  m.def("solve_system", [](const std::string& system, const PySection& s, std::optional<double> alpha,
                           std::optional<double> epsilon, const SolverConfig& cfg) {
        SystemSetup setup;
        setup.system = parse_system(system);
        if (alpha) {
          setup.params.alpha = *alpha;
          setup.alpha_mode = Calibration::fixed;
        }
        if (epsilon) {
          setup.params.epsilon = *epsilon;
          setup.epsilon_mode = Calibration::fixed;
        }
        SystemRun run = [&] {
          py::gil_scoped_release release;
          return solve_system(setup, s, cfg);
        }();
        py::list steps;
        for (const auto& st : run.trace.steps) steps.append(step_dict(st));
        py::dict d;
        d["params"] = run.params;
        d["restarts"] = run.restarts;
        d["steps"] = steps;
        d["final_t"] = run.trace.final_t();
        d["state0"] = run.state0;
        d["final_state"] = *run.trace.final_state;
        return d;
      }, py::arg("system"), py::arg("section"), py::arg("alpha") = py::none(), py::arg("epsilon") = py::none(),
      py::arg("config") = SolverConfig{});

  py::class_<RunConfig>(m, "RunConfig")
      .def_readwrite("n", &RunConfig::n)
      .def_readwrite("output_dir", &RunConfig::output_dir)
      .def_readwrite("seed", &RunConfig::seed)
      .def_readwrite("alpha", &RunConfig::alpha)
      .def_readwrite("epsilon", &RunConfig::epsilon)
      .def_property_readonly("system", [](const RunConfig& c) { return std::string(to_string(c.system)); })
      .def("to_text", [](const RunConfig& c) { return to_text(c); });
  m.def("parse_config", [](const std::string& text) { return parse_config(text); });
  m.def("load_config", [](const std::filesystem::path& p) { return load_config(p); });

  m.def("run", [](const RunConfig& c, bool quiet) {
        py::gil_scoped_release release;
        return run(c, RunOptions{RunMode::solve, quiet, nullptr});
      }, py::arg("config"), py::arg("quiet") = true);
  m.def("verify", [](const std::filesystem::path& dir) { return verify(dir, RunOptions{RunMode::solve, true, nullptr}); });
  m.def("compare", [](const std::filesystem::path& a, const std::filesystem::path& b) {
    return py::module_::import("json").attr("loads")(export_comparison(a, b).dump());
  });
}
