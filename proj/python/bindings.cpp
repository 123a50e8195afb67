#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "vbsde/biot_savart.hpp"
#include "vbsde/brownian.hpp"
#include "vbsde/bsde_engine.hpp"
#include "vbsde/bundle.hpp"
#include "vbsde/diagnostics.hpp"
#include "vbsde/errors.hpp"
#include "vbsde/field_io.hpp"
#include "vbsde/spectral_oracle.hpp"

namespace py = pybind11;
using namespace vbsde;

namespace {

using RealArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using ComplexArray = py::array_t<Complex, py::array::c_style | py::array::forcecast>;

int square_side(const py::buffer_info& b) {
  if (b.ndim != 2 || b.shape[0] != b.shape[1]) throw ConfigError("expected a square N x N array");
  return static_cast<int>(b.shape[0]);
}

ScalarField from_grid(RealArray a) {
  const auto b = a.request();
  const int n = square_side(b);
  const auto* p = static_cast<const double*>(b.ptr);
  return forward_transform(GridSignal(n, std::vector<double>(p, p + b.size)));
}

ScalarField from_modes(ComplexArray a, bool mean_zero) {
  const auto b = a.request();
  const int n = square_side(b);
  const auto* p = static_cast<const Complex*>(b.ptr);
  return ScalarField::from_modes(n, std::vector<Complex>(p, p + b.size), mean_zero);
}

RealArray to_grid(const ScalarField& f) {
  const GridSignal g = inverse_transform(f);
  const int n = f.grid_size();
  RealArray out({n, n});
  std::copy(g.values().begin(), g.values().end(), out.mutable_data());
  return out;
}

ComplexArray to_modes(const ScalarField& f) {
  const int n = f.grid_size();
  ComplexArray out({n, n});
  std::copy(f.modes().begin(), f.modes().end(), out.mutable_data());
  return out;
}

RealArray vec2_array(const std::vector<Vec2>& v) {
  RealArray out({static_cast<py::ssize_t>(v.size()), py::ssize_t{2}});
  auto r = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < v.size(); ++i) {
    r(i, 0) = v[i].x1;
    r(i, 1) = v[i].x2;
  }
  return out;
}

py::dict record_dict(const IterationRecord& r) {
  py::dict d;
  d["iteration"] = r.iteration;
  d["delta_norm"] = r.delta_norm;
  d["delta_sup"] = r.delta_sup;
  d["delta_bmo"] = r.delta_bmo;
  d["solution_floor"] = r.solution_floor;
  d["difference_floor"] = r.difference_floor;
  d["sup_abs"] = r.sup_abs;
  d["mc_tolerance"] = r.mc_tolerance;
  d["seconds"] = r.seconds;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Vorticity BSDE solver core";
  m.attr("__version__") = "0.1.0";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
  py::register_exception<ConvergenceError>(m, "ConvergenceError", base.ptr());

  py::class_<ScalarField>(m, "Field", "Real mean-zero periodic field held as Fourier coefficients.")
      .def_static("from_grid", &from_grid, py::arg("values"),
                  "Field from samples on the N x N lattice x_j = j/N (x1 index first).")
      .def_static("from_modes", &from_modes, py::arg("modes"), py::arg("mean_zero") = true)
      .def_static("sine", &ScalarField::sine, py::arg("n"), py::arg("k1"), py::arg("k2"),
                  py::arg("amplitude") = 1.0)
      .def_static("cosine", &ScalarField::cosine, py::arg("n"), py::arg("k1"), py::arg("k2"),
                  py::arg("amplitude") = 1.0)
      .def_property_readonly("n", &ScalarField::grid_size)
      .def("grid", &to_grid)
      .def("modes", &to_modes)
      .def("mode", &ScalarField::mode, py::arg("k1"), py::arg("k2"))
      .def("__call__", [](const ScalarField& f, double x1, double x2) { return evaluate(f, {x1, x2}); })
      .def("l2_norm", &l2_norm)
      .def("sup_norm", &sup_norm)
      .def("sobolev_norm", &sobolev_norm, py::arg("order"))
      .def("translate", [](const ScalarField& f, double a1, double a2) { return translate(f, {a1, a2}); })
      .def(py::self + py::self)
      .def(py::self - py::self)
      .def(py::self * double())
      .def(double() * py::self)
      .def("__repr__", [](const ScalarField& f) { return "<Field N=" + std::to_string(f.grid_size()) + ">"; });

  m.def("random_field", &random_field, py::arg("n"), py::arg("seed"), py::arg("decay") = 0.0);
  m.def("apply_K", [](const ScalarField& w) {
    VectorField u = apply_K(w);
    return py::make_tuple(u.c1, u.c2);
  }, "Velocity (u1, u2) of a mean-zero vorticity via the Biot-Savart law.");
  m.def("curl", [](const ScalarField& u1, const ScalarField& u2) { return curl({u1, u2}); });
  m.def("divergence", [](const ScalarField& u1, const ScalarField& u2) { return divergence({u1, u2}); });

  py::class_<VorticityTrajectory>(m, "Trajectory")
      .def_property_readonly("fields", &VorticityTrajectory::fields)
      .def_property_readonly("nu", &VorticityTrajectory::nu)
      .def_property_readonly("dt", &VorticityTrajectory::dt)
      .def_property_readonly("steps", &VorticityTrajectory::steps)
      .def("__call__", [](const VorticityTrajectory& t, double tau, double x1, double x2) {
        return t.evaluate(tau, {x1, x2});
      }, py::arg("tau"), py::arg("x1"), py::arg("x2"));
  m.def("evolve", &evolve, py::arg("omega0"), py::arg("nu"), py::arg("T"), py::arg("steps"),
        py::call_guard<py::gil_scoped_release>(),
        "Pseudo-spectral RK4 reference solution sampled at `steps` + 1 nodes.");
  m.def("heat_solution", &heat_solution, py::arg("psi"), py::arg("nu"), py::arg("tau"));

  py::class_<BrownianPath>(m, "BrownianPath")
      .def_readonly("seed", &BrownianPath::seed)
      .def_readonly("dt", &BrownianPath::dt)
      .def_property_readonly("steps", &BrownianPath::steps)
      .def_property_readonly("values", [](const BrownianPath& p) { return vec2_array(p.values); })
      .def_property_readonly("increments", [](const BrownianPath& p) { return vec2_array(p.increments); });
  m.def("simulate", &simulate, py::arg("seed"), py::arg("steps"), py::arg("T"));

  py::class_<SolverConfig>(m, "SolverConfig")
      .def(py::init<>())
      .def(py::init([](py::kwargs kw) {
        SolverConfig c;
        py::object self = py::cast(&c, py::return_value_policy::reference);
        for (auto [k, v] : kw) {
          if (!py::hasattr(self, k)) throw ConfigError("unknown SolverConfig field '" + py::str(k).cast<std::string>() + "'");
          py::setattr(self, k, v);
        }
        return c;
      }))
      .def_readwrite("N", &SolverConfig::N)
      .def_readwrite("L", &SolverConfig::L)
      .def_readwrite("M_outer", &SolverConfig::M_outer)
      .def_readwrite("M_inner", &SolverConfig::M_inner)
      .def_readwrite("nu", &SolverConfig::nu)
      .def_readwrite("T", &SolverConfig::T)
      .def_readwrite("alpha", &SolverConfig::alpha)
      .def_readwrite("picard_tol", &SolverConfig::picard_tol)
      .def_readwrite("picard_tol_floor_multiple", &SolverConfig::picard_tol_floor_multiple)
      .def_readwrite("max_iter", &SolverConfig::max_iter)
      .def_readwrite("base_seed", &SolverConfig::base_seed)
      .def_readwrite("workers", &SolverConfig::workers)
      .def_readwrite("control_variate", &SolverConfig::control_variate)
      .def_readwrite("batches", &SolverConfig::batches)
      .def_readwrite("oversample", &SolverConfig::oversample)
      .def_property_readonly("dt", &SolverConfig::dt)
      .def("validate", &SolverConfig::validate);

  py::class_<BsdeSolution>(m, "Solution")
      .def_property_readonly("fields", [](const BsdeSolution& s) { return s.Y.fields; })
      .def_property_readonly("pooled_se", [](const BsdeSolution& s) {
        return s.Y.stats ? py::cast(s.Y.stats->pooled_se) : py::none();
      })
      .def_property_readonly("iterations", [](const BsdeSolution& s) { return s.Y.iteration; })
      .def_property_readonly("history", [](const BsdeSolution& s) {
        py::list out;
        for (const auto& r : s.history) out.append(record_dict(r));
        return out;
      })
      .def_readonly("psi", &BsdeSolution::psi)
      .def_readonly("config", &BsdeSolution::config)
      .def_readonly("ratios", &BsdeSolution::ratios)
      .def_readonly("ratio_above_noise", &BsdeSolution::ratio_above_noise)
      .def_readonly("alpha", &BsdeSolution::alpha)
      .def_readonly("C0", &BsdeSolution::C0)
      .def_readonly("C1", &BsdeSolution::C1)
      .def_readonly("tolerance", &BsdeSolution::tolerance)
      .def_readonly("converged", &BsdeSolution::converged)
      .def("velocity", [](const BsdeSolution& s, int m) {
        VectorField u = apply_K(s.Y.fields.at(static_cast<std::size_t>(m)));
        return py::make_tuple(u.c1, u.c2);
      }, py::arg("m"))
      .def("diagnostics", [](const BsdeSolution& s) {
        py::gil_scoped_release release;
        return diagnostics_report(s);
      }, "Diagnostics report as a JSON string.");

  m.def("picard_solve", &picard_solve, py::arg("psi"), py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
  m.def("bsde_residual", &bsde_residual, py::arg("solution"), py::arg("path"));
  m.def("select_alpha", &select_alpha, py::arg("C0"), py::arg("C1"), py::arg("nu"), py::arg("T"));
  m.def("z_bmo_bound", &z_bmo_bound, py::arg("C1"), py::arg("C0"), py::arg("nu"), py::arg("T"));

  m.def("save_field", &save_field, py::arg("path"), py::arg("field"));
  m.def("load_field", &load_field, py::arg("path"));
  m.def("save_trajectory", [](const std::filesystem::path& p, const VorticityTrajectory& t) {
    save_trajectory(p, t.to_data());
  }, py::arg("path"), py::arg("trajectory"));
  m.def("load_trajectory", [](const std::filesystem::path& p) {
    return VorticityTrajectory::from_data(load_trajectory(p));
  }, py::arg("path"));
  m.def("save_bundle", &save_bundle, py::arg("directory"), py::arg("solution"));
  m.def("load_bundle", &load_bundle, py::arg("directory"));
}
