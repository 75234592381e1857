#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "bjj/analytic.hpp"
#include "bjj/cli.hpp"
#include "bjj/elliptic.hpp"
#include "bjj/errors.hpp"
#include "bjj/estimation.hpp"
#include "bjj/numeric.hpp"
#include "bjj/param_map.hpp"
#include "bjj/types.hpp"

namespace py = pybind11;
using namespace bjj;

namespace {

std::vector<estimation::Sample> to_samples(const std::vector<double>& t, const std::vector<double>& v) {
  if (t.size() != v.size()) throw DomainError("time and value arrays differ in length");
  std::vector<estimation::Sample> out;
  out.reserve(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) out.push_back({t[i], v[i]});
  return out;
}

}  // namespace

PYBIND11_MODULE(_bjj, m) {
  m.doc() = "Bosonic Josephson junction dynamics, parameter maps and fitting";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  auto domain = py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<GuardBandError>(m, "GuardBandError", domain.ptr());
  py::register_exception<SingularityError>(m, "SingularityError", base.ptr());
  py::register_exception<IntegrationError>(m, "IntegrationError", base.ptr());
  py::register_exception<DegeneracyError>(m, "DegeneracyError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

  py::class_<TmbhParams>(m, "TmbhParams")
      .def(py::init<>())
      .def_static("from_lambda", &TmbhParams::from_lambda, py::arg("J"), py::arg("Lambda"), py::arg("N"),
                  py::arg("epsilon") = 0.0, py::arg("eta") = 0.0)
      .def_readwrite("J", &TmbhParams::J)
      .def_readwrite("U", &TmbhParams::U)
      .def_readwrite("N", &TmbhParams::N)
      .def_readwrite("epsilon", &TmbhParams::epsilon)
      .def_readwrite("eta", &TmbhParams::eta)
      .def_property_readonly("Lambda", &TmbhParams::Lambda)
      .def("validate", &TmbhParams::validate);

  py::class_<InitialState>(m, "InitialState")
      .def(py::init([](double n0, double phi0) { return InitialState{n0, phi0}; }), py::arg("n0") = 0.0,
           py::arg("phi0") = 0.0)
      .def_readwrite("n0", &InitialState::n0)
      .def_readwrite("phi0", &InitialState::phi0)
      .def_property_readonly("lambda_", &InitialState::lambda);

  py::class_<PendulumParams>(m, "PendulumParams")
      .def(py::init<>())
      .def_readwrite("k0", &PendulumParams::k0)
      .def_readwrite("omega0", &PendulumParams::omega0)
      .def_readwrite("N0", &PendulumParams::N0)
      .def_readwrite("tau", &PendulumParams::tau)
      .def_readwrite("tau2", &PendulumParams::tau2)
      .def_readwrite("delta_phi", &PendulumParams::delta_phi)
      .def_readwrite("delta_n", &PendulumParams::delta_n)
      .def_readwrite("sigma0", &PendulumParams::sigma0);

  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("times", &Trajectory::times)
      .def_readonly("phi", &Trajectory::phi)
      .def_readonly("n", &Trajectory::n)
      .def_readonly("dphi", &Trajectory::dphi)
      .def_property_readonly("source", [](const Trajectory& t) { return std::string(to_string(t.source)); });

  m.def("regime_name", [](Regime r) { return std::string(to_string(r)); });
  py::enum_<Regime>(m, "Regime")
      .value("Equilibrium", Regime::Equilibrium)
      .value("JosephsonOscillation", Regime::JosephsonOscillation)
      .value("Separatrix", Regime::Separatrix)
      .value("SelfTrapped", Regime::SelfTrapped);

  auto ell = m.def_submodule("elliptic", "Elliptic integrals and Jacobi functions in the parameter m");
  ell.def("complete_K", &elliptic::complete_K, py::arg("m"));
  ell.def("incomplete_F", &elliptic::incomplete_F, py::arg("phi"), py::arg("m"));
  ell.def("am", &elliptic::jacobi_am, py::arg("u"), py::arg("m"));
  ell.def(
      "sn_cn_dn",
      [](double u, double mm) {
        const auto r = elliptic::jacobi_sn_cn_dn(u, mm);
        return py::make_tuple(r.sn, r.cn, r.dn);
      },
      py::arg("u"), py::arg("m"));
  ell.def("inv_sn", &elliptic::inv_sn, py::arg("x"), py::arg("m"));
  ell.def("quarter_period", &elliptic::quarter_period, py::arg("m"));

  auto an = m.def_submodule("analytic", "Closed-form pendulum solutions");
  an.def("plasma_frequency", &analytic::plasma_frequency, py::arg("J"), py::arg("Lambda"), py::arg("phi0"));
  an.def("energy_ratio_k", &analytic::energy_ratio_k, py::arg("s0"), py::arg("p"), py::arg("tau") = kInfinity);
  an.def("phi_undamped", &analytic::phi_undamped, py::arg("t"), py::arg("P"));
  an.def("n_undamped", &analytic::n_undamped, py::arg("t"), py::arg("P"));
  an.def("mean_imbalance", &analytic::mean_imbalance, py::arg("N0"), py::arg("k"));
  an.def("separatrix_crossing_time", &analytic::separatrix_crossing_time, py::arg("k0"), py::arg("tau"));
  an.def(
      "evaluate",
      [](double t, const PendulumParams& P, std::optional<double> guard) {
        const auto r = analytic::evaluate_piecewise(t, P, guard);
        return py::make_tuple(r.phi, r.n);
      },
      py::arg("t"), py::arg("P"), py::arg("guard") = py::none());
  an.def("classify_regime", &analytic::classify_regime, py::arg("k"));
  an.def(
      "rigidity_check",
      [](const PendulumParams& P, Regime r) {
        const auto res = analytic::rigidity_check(P, r);
        return py::make_tuple(res.delta, res.ok);
      },
      py::arg("P"), py::arg("regime"));

  auto pm = m.def_submodule("param_map", "Pendulum and TMBH parameter conversions");
  pm.def("damped_frequency", &param_map::damped_frequency, py::arg("omega0"), py::arg("tau"));
  pm.def("decay_time", &param_map::decay_time, py::arg("p"), py::arg("s0"));
  pm.def("to_tmbh_simplified", &param_map::to_tmbh_simplified, py::arg("P"), py::arg("N"),
         py::arg("lambda_") = 1.0);
  pm.def(
      "to_tmbh_general",
      [](const PendulumParams& P, const InitialState& s0, double N) { return param_map::to_tmbh_general(P, s0, N); },
      py::arg("P"), py::arg("s0"), py::arg("N"));
  pm.def(
      "to_pendulum", [](const TmbhParams& p, const InitialState& s0) { return param_map::to_pendulum(p, s0); },
      py::arg("p"), py::arg("s0"));

  auto nu = m.def_submodule("numeric", "Reference ODE integration");
  nu.def("alpha_invariant", &numeric::alpha_invariant, py::arg("n"), py::arg("phi"), py::arg("Lambda"));
  nu.def("linspace_grid", &numeric::linspace_grid, py::arg("t_end"), py::arg("n_points"));
  nu.def(
      "integrate_tmbh",
      [](const TmbhParams& p, const InitialState& s0, const std::vector<double>& grid) {
        return numeric::integrate_tmbh(p, s0, grid);
      },
      py::arg("p"), py::arg("s0"), py::arg("grid"));
  nu.def(
      "integrate_pendulum",
      [](double omega0, double tau, double phi0, double dphi0, const std::vector<double>& grid) {
        return numeric::integrate_pendulum(omega0, tau, {phi0, dphi0}, grid);
      },
      py::arg("omega0"), py::arg("tau"), py::arg("phi0"), py::arg("dphi0"), py::arg("grid"));

  auto es = m.def_submodule("estimation", "Pendulum-model fitting and statistics");
  es.def("correlation", &estimation::correlation, py::arg("C"));
  es.def("propagate_error", &estimation::propagate_error, py::arg("grad"), py::arg("C"));
  py::class_<estimation::FitReport>(es, "FitReport")
      .def_readonly("params", &estimation::FitReport::params)
      .def_readonly("sigmas", &estimation::FitReport::sigmas)
      .def_readonly("covariance", &estimation::FitReport::covariance)
      .def_readonly("correlation", &estimation::FitReport::correlation)
      .def_readonly("mse", &estimation::FitReport::mse)
      .def_readonly("iterations", &estimation::FitReport::iterations)
      .def_readonly("converged", &estimation::FitReport::converged)
      .def_readonly("regime", &estimation::FitReport::regime)
      .def_readonly("warnings", &estimation::FitReport::warnings)
      .def_property_readonly("J", [](const estimation::FitReport& r) { return r.derived.J.value; })
      .def_property_readonly("Lambda", [](const estimation::FitReport& r) { return r.derived.Lambda.value; })
      .def_property_readonly("epsilon", [](const estimation::FitReport& r) { return r.derived.epsilon.value; })
      .def_property_readonly("eta", [](const estimation::FitReport& r) { return r.derived.eta.value; });
  es.def(
      "fit",
      [](const std::vector<double>& t_phi, const std::vector<double>& phi, const std::vector<double>& t_n,
         const std::vector<double>& n, const PendulumParams& guess, double n_atoms,
         std::optional<double> weight_phase, std::optional<double> weight_imbalance) {
        estimation::DataSet d;
        d.phase = to_samples(t_phi, phi);
        d.imbalance = to_samples(t_n, n);
        d.n_atoms = n_atoms;
        d.weight_phase = weight_phase;
        d.weight_imbalance = weight_imbalance;
        py::gil_scoped_release release;
        return estimation::fit(d, guess);
      },
      py::arg("t_phi"), py::arg("phi"), py::arg("t_n"), py::arg("n"), py::arg("guess"), py::arg("n_atoms"),
      py::arg("weight_phase") = py::none(), py::arg("weight_imbalance") = py::none());

  m.def(
      "run_cli", [](const std::vector<std::string>& argv) { return cli::run(argv); }, py::arg("argv"),
      "Runs the command-line front end in-process and returns its exit code.");
}
