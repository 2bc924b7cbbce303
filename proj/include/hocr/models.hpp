#pragma once

#include <iosfwd>

#include "hocr/reduce.hpp"

namespace hocr {

struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A catalogued mechanical system: the Lagrangian data, its declared scaling
/// symmetry, frozen reference expressions, and default numeric data.
///
/// Invariant: every entry in `references` was checked equivalent to the
/// corresponding derived object when the descriptor was built (proved-equal,
/// or numerically-equal where radicals block a canonical-form proof); a
/// mismatch throws ModelError from the factory.
struct ModelDescriptor {
    std::string name;
    LagrangianSystem system;
    std::optional<ScalingSymmetry> symmetry;

    /// Frozen reference expressions keyed by a stable semantic name, e.g.
    /// "contact_hamiltonian", "reduced_core_rho", "eom_pi0_chi".
    std::map<std::string, Expr> references;

    Binding parameters;                     // default parameter binding
    std::map<std::string, double> initial;  // default initial data by symbol name
    std::string initial_chart = "full";     // chart the initial data addresses: "full" or "rho"

    /// Prescribed jets (e.g. a lapse function and its derivatives) ->
    /// expressions in the time symbol, for numeric evaluation.
    std::map<Symbol, Expr> prescribed;

    // Pipeline artifacts built alongside the reference checks. Absent for
    // file-loaded models, which run the pipeline on demand.
    std::optional<ReductionResult> reduction;       // Lagrangian-side reduction
    std::optional<HamiltonianSystem> full_hamiltonian;  // Legendre of `system`
    std::optional<HamiltonianSystem> rho_hamiltonian;   // Legendre of e^rho f
    std::optional<HamiltonianSystem> contact;           // reduced contact system

    // Energy-promotion artifacts (kepler_with_energy).
    std::optional<LagrangianSystem> promoted;
    std::optional<Rational> lambda_E;
};

/// Fourth-order oscillator with an angular spectator, scale-invariant under
/// q -> kappa q with untouched time. damping > 0 adds a linear action term
/// -gam*z on a contact chart. Throws std::invalid_argument for lambda = 0 or
/// damping < 0.
ModelDescriptor pais_uhlenbeck(double damping = 0.0, double lambda = 0.1);

/// Third-order central-force system with a radical kinetic correction,
/// scale-invariant under r -> kappa^2 r, t -> kappa^3 t.
ModelDescriptor modified_kepler();

/// First-order central-force system with an additive energy constant
/// sign*E; energy promotion turns it into the dynamical velocity
/// z_E'^(2/3). sign must be +1 or -1.
ModelDescriptor kepler_with_energy(int sign = +1);

/// Defaults used by the built-in catalog: V = 1/2 phi^2 and N = 1 + sin(t)/10.
Expr default_flrw_potential();
Expr default_flrw_lapse();

/// Second-order cosmological volume/scalar system in proper time (unit
/// lapse). The potential must depend only on the symbol "phi".
ModelDescriptor flrw_fr(const Expr& potential);

/// Same system with a prescribed, strictly positive lapse expression in the
/// time symbol "t". Substituting a unit lapse reproduces flrw_fr dynamics
/// exactly (the cores differ by a recorded total-derivative gauge term).
ModelDescriptor flrw_general_lapse(const Expr& lapse, const Expr& potential);

/// Fill the pipeline artifact slots (reduction, rho_hamiltonian, contact)
/// for a descriptor with a declared symmetry whose slots are still empty
/// (file-loaded models). Throws ModelError when the symmetry is refuted or
/// the two contact-Hamiltonian routes disagree; no-op without a symmetry.
/// With require_hamiltonian=false a degenerate Legendre map (e.g. a promoted
/// coupling entering L only linearly through its velocity) leaves
/// rho_hamiltonian and contact unset instead of throwing.
void ensure_pipeline(ModelDescriptor& m, bool require_hamiltonian = true);

/// Names accepted by builtin_model (and the CLI --model flag).
std::vector<std::string> builtin_model_names();

/// Construct a built-in model by name with its default configuration.
/// Throws ModelError for an unknown name.
ModelDescriptor builtin_model(const std::string& name);

/// Parse a model definition from the line-oriented file format (sections
/// [coordinates], [parameters], [lagrangian], [symmetry], [contact],
/// [initial]; see the repository documentation for the grammar). Throws
/// ModelError with a line reference on malformed input.
ModelDescriptor load_model(std::istream& in, const std::string& name = "user-model");
ModelDescriptor load_model_file(const std::string& path);

}  // namespace hocr
