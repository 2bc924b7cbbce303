// Python bindings: a thin dict-oriented facade over the model pipeline.
// Symbolic objects cross the boundary as strings in the expression grammar;
// trajectories as plain lists so callers can feed numpy/pandas directly.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hocr/cli.hpp"
#include "hocr/models.hpp"
#include "hocr/verify.hpp"

namespace py = pybind11;
using namespace hocr;

namespace {

py::dict reduction_summary(const ModelDescriptor& m) {
    if (!m.reduction)
        throw ModelError("model '" + m.name +
                         "' declares no scaling symmetry; nothing to reduce");
    const ReductionResult& r = *m.reduction;
    py::dict d;
    d["scaled_coordinate"] = r.sym.coordinate;
    d["order"] = r.k;
    d["Lambda"] = r.sym.Lambda.str();
    d["reparameterized"] = r.reparameterized;
    if (r.reparameterized) d["repar_exponent"] = r.repar_exponent.str();
    if (m.lambda_E) d["lambda_E"] = m.lambda_E->str();
    py::dict weights;
    for (const auto& [name, w] : r.sym.extra_weights) weights[py::str(name)] = w.str();
    d["weights"] = weights;
    d["f"] = to_string(r.f);
    d["S"] = to_string(r.S_expr);
    d["herglotz_L"] = to_string(r.herglotz_L);
    if (m.contact) d["contact_H"] = to_string(m.contact->H);
    py::dict fwd, inv;
    for (const auto& [s, e] : r.forward_map) fwd[py::str(s.name())] = to_string(e);
    for (const auto& [s, e] : r.inverse_map) inv[py::str(s.name())] = to_string(e);
    d["forward_map"] = fwd;
    d["inverse_map"] = inv;
    return d;
}

py::dict simulate(const ModelDescriptor& m, const std::string& system, double t_end,
                  double dt, double rel_tol, double abs_tol, bool co_integrate_time) {
    SimulationResult sim =
        simulate_model(m, {system, t_end, dt, rel_tol, abs_tol, co_integrate_time});
    py::dict d;
    d["system"] = system;
    d["parameterization"] = sim.compiled.parameterization;
    d["columns"] = sim.trajectory.columns;
    d["times"] = sim.trajectory.times;
    d["rows"] = sim.trajectory.rows;
    return d;
}

py::dict report_dict(const VerificationReport& rep) {
    py::dict d;
    d["model"] = rep.model;
    d["all_pass"] = rep.all_pass();
    py::dict settings;
    for (const auto& [k, v] : rep.settings) settings[py::str(k)] = v;
    d["settings"] = settings;
    py::list checks;
    for (const CheckResult& c : rep.checks) {
        py::dict e;
        e["name"] = c.name;
        e["kind"] = c.kind;
        e["max_abs"] = c.max_abs;
        e["max_rel"] = c.max_rel;
        e["tolerance"] = c.tolerance;
        e["pass"] = c.pass;
        e["detail"] = c.detail;
        checks.append(std::move(e));
    }
    d["checks"] = checks;
    return d;
}

}  // namespace

PYBIND11_MODULE(_hocr, mod) {
    mod.doc() =
        "symbolic-numeric reduction toolkit for scaling-symmetric higher-order "
        "Lagrangian systems";

    mod.def("catalog", &builtin_model_names, "names accepted by Model(name=...)");

    py::register_exception<ModelError>(mod, "ModelError", PyExc_ValueError);
    py::register_exception<IntegrationError>(mod, "IntegrationError", PyExc_RuntimeError);

    py::class_<ModelDescriptor>(mod, "Model")
        .def(py::init([](const std::string& name, const std::string& file,
                         bool promote_energy, const std::vector<std::string>& couplings) {
                 return configure_model({name, file, promote_energy, couplings});
             }),
             py::arg("name") = "", py::arg("file") = "",
             py::arg("promote_energy") = false,
             py::arg("promote_couplings") = std::vector<std::string>{},
             "load a catalog model by name or a definition file, applying the "
             "requested promotions and running the reduction pipeline")
        .def_property_readonly("name", [](const ModelDescriptor& m) { return m.name; })
        .def_property_readonly("has_symmetry",
                               [](const ModelDescriptor& m) { return bool(m.reduction); })
        .def_property_readonly("lagrangian",
                               [](const ModelDescriptor& m) { return to_string(m.system.L); })
        .def("reduction", &reduction_summary,
             "the reduction artifacts as strings in the expression grammar")
        .def("simulate", &simulate, py::arg("system") = "full", py::arg("t_end") = 5.0,
             py::arg("dt") = 0.0, py::arg("rel_tol") = 1e-10, py::arg("abs_tol") = 1e-12,
             py::arg("co_integrate_time") = false,
             "integrate from the default initial data; dt > 0 selects the "
             "fixed-step integrator")
        .def(
            "verify",
            [](const ModelDescriptor& m, double horizon, unsigned seed) {
                return report_dict(run_model_suite(m, horizon, seed));
            },
            py::arg("horizon") = 5.0, py::arg("seed") = 20240901,
            "run every applicable check and return the report as a dict");
}
