#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nem/error.hpp"
#include "nem/exact.hpp"
#include "nem/nqs.hpp"
#include "nem/pipeline.hpp"

namespace py = pybind11;

namespace {

// JSON crosses the boundary as text; the Python wrapper converts to dicts.
std::string make_config_json(const std::string& user, const std::vector<std::string>& overrides) {
  return nem::make_config(nem::Json::parse(user), overrides).document.dump();
}

std::string run_json(const std::string& user, bool standalone) {
  const auto cfg = nem::make_config(nem::Json::parse(user));
  py::gil_scoped_release release;
  const auto report = standalone ? nem::run_standalone_vmc(cfg) : nem::run_pipeline(cfg);
  return nem::report_to_json(report).dump();
}

nem::PauliHamiltonian schwinger(int n_sites, double mass) {
  nem::SchwingerParams p;
  p.n_sites = n_sites;
  p.mass = mass;
  return nem::build_schwinger(p);
}

}  // namespace

PYBIND11_MODULE(_nem, m) {
  m.doc() = "Bindings for the nem neural error mitigation library";

  // Translators are tried newest first, so the base class goes first.
  py::register_exception<nem::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<nem::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<nem::NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def("_make_config", &make_config_json, py::arg("user"), py::arg("overrides"));
  m.def("_run", &run_json, py::arg("user"), py::arg("standalone"));

  m.def(
      "schwinger_terms",
      [](int n_sites, double mass) {
        const auto h = schwinger(n_sites, mass);
        std::vector<std::pair<double, std::string>> terms;
        if (h.identity_offset() != 0.0) terms.emplace_back(h.identity_offset(), std::string(static_cast<std::size_t>(n_sites), 'I'));
        for (const auto& t : h.terms()) terms.emplace_back(t.coefficient.real(), t.label());
        return terms;
      },
      py::arg("n_sites"), py::arg("mass"), "Pauli terms (coefficient, label) of the Schwinger Hamiltonian.");

  m.def(
      "ground_state",
      [](int n_sites, double mass) {
        const auto gs = nem::exact_ground_state(schwinger(n_sites, mass));
        return py::make_tuple(gs.energy, Eigen::VectorXcd(gs.state));
      },
      py::arg("n_sites"), py::arg("mass"), "Lanczos ground energy and statevector.");

  m.def(
      "checkpoint_statevector",
      [](const std::string& path) { return Eigen::VectorXcd(nem::TransformerNqs(nem::load_checkpoint(path)).statevector()); },
      py::arg("path"), "Amplitudes of a saved NQS, indexed with qubit q as bit q.");

  m.def(
      "summarize",
      [](const std::vector<double>& values) {
        const auto s = nem::summarize(values);
        return py::dict(py::arg("count") = s.count, py::arg("median") = s.median, py::arg("q1") = s.q1,
                        py::arg("q3") = s.q3);
      },
      py::arg("values"));
}
