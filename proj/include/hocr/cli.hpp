#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hocr/models.hpp"
#include "hocr/verify.hpp"

namespace hocr {

/// Model source plus optional promotions; exactly one of `model` (catalog
/// name) or `file` (definition file path) must be set.
struct ModelOptions {
    std::string model;
    std::string file;
    bool promote_energy = false;
    std::vector<std::string> promote_couplings;
};

/// Resolve the source, apply the promotions, and run the reduction pipeline
/// so reduce/simulate/verify all see the same artifacts. Throws ModelError
/// on bad configuration or a refuted symmetry. When couplings are promoted
/// the Hamiltonian-side artifacts may be absent (degenerate Legendre map).
ModelDescriptor configure_model(const ModelOptions& opt);

struct SimulateOptions {
    std::string system = "full";  // "full" | "reduced"
    double t_end = 5.0;           // <= 0 emits a single-row trajectory
    double dt = 0.0;              // > 0 selects the fixed-step integrator
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    bool co_integrate_time = false;  // reduced runs: append rho and t_phys
};

struct SimulationResult {
    CompiledModel compiled;
    Trajectory trajectory;
};

/// Integrate the requested system from the model's default initial data,
/// appending an `f_core` readout of the reduced core along the run. An
/// IntegrationError from a model with a radical core names the sqrt
/// argument that reached its domain boundary.
SimulationResult simulate_model(const ModelDescriptor& m, const SimulateOptions& opt);

/// Command-line front end. `args` excludes the program name.
///
/// Exit codes: 0 success, 1 verification failure, 2 input/definition error,
/// 3 runtime integration error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hocr
