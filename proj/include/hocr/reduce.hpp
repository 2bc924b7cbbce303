#pragma once

#include "hocr/mech.hpp"

namespace hocr {

struct ReductionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Declared scaling symmetry: Q -> kappa^A Q, t -> kappa^B t, scaling the
/// Lagrangian by kappa^Lambda. Extra coordinates (promoted couplings) may
/// carry their own base weight w: coord -> kappa^w coord.
struct ScalingSymmetry {
    std::string coordinate;  // the scaled coordinate Q
    Rational A;
    Rational B;
    Rational Lambda;                            // degree
    std::map<std::string, Rational> extra_weights = {};
    bool reparameterizing() const { return B != 0; }
};

struct SymmetryReport {
    bool verified;
    Equivalence evidence;
    Binding witness;  // refutation sample (empty when verified)
};

/// Finite-transformation check with a symbolic kappa: every jet picks up its
/// lifted weight and the transformed L must equal kappa^Lambda * L.
SymmetryReport verify_scaling_symmetry(const LagrangianSystem& sys, const ScalingSymmetry& sym);

/// Lifted weight table over jets 0..2k-1: Q_alpha -> A - alpha*B, unscaled
/// q_alpha -> -alpha*B (plus declared extra base weights).
std::map<Symbol, Rational> lift_symmetry(const ScalingSymmetry& sym, const JetChart& chart);

/// Output of the Lagrangian-side reduction pipeline.
struct ReductionResult {
    ScalingSymmetry sym;
    int k = 0;                  // order of the scaled coordinate
    bool reparameterized = false;
    Rational repar_exponent;    // Lambda - 1 (dtau = e^{(Lambda-1) rho} dt); 0 when B = 0

    JetChart rho_chart;         // rho (order k) + unscaled coordinates
    JetChart reduced_chart;     // chi (order k-1) + unscaled + action S
    Expr f_rho;                 // reduced core in rho jets (rho-free)
    Expr f;                     // f in chi variables
    Expr S_rho;                 // generalized action in rho jets
    Expr S_expr;                // generalized action in chi variables
    Expr herglotz_L;            // f - chi*S on the reduced contact chart
    Expr contact_H;             // H^c (filled by a Hamiltonian-side route)

    // rho-chart jets -> expressions over the full chart (initial-data maps)
    std::map<Symbol, Expr> forward_map;
    // full-chart jets -> expressions over the rho chart
    std::map<Symbol, Expr> inverse_map;

    Symbol chi(int a) const { return reduced_chart.jet("chi", a); }
    Symbol action() const { return *reduced_chart.action(); }
};

/// Rewrite L dt = Lhat dtau with Lhat = e^rho f; f must come out rho-free.
/// B != 0: x = Q^{1/A} = e^rho, dtau = x^{Lambda-1} dt. B = 0: x = e^{rho/Lambda},
/// tau = t. Promoted couplings with nonzero weight are not supported here.
ReductionResult reparameterize_and_factor(const LagrangianSystem& sys, const ScalingSymmetry& sym);

/// S = sum_{a=0}^{k-1} (-1)^a (rho' + d_tau)^a df/drho^{(a+1)} in rho jets.
Expr generalized_action(const Expr& f_rho, const JetChart& rho_chart);

/// Fill S, the chi-variable forms, and the Herglotz Lagrangian L^H = f - chi S.
ReductionResult build_herglotz_lagrangian(ReductionResult r);

/// Hamiltonian-side reduction of the Legendre transform of Lhat (momenta
/// prefix "p" on the rho chart): chi^(a) = rho^(alpha+1), S = p0_rho/e^rho,
/// pi^a_chi = p^{a+1}_rho/e^rho, pi^alpha_i = p^alpha_i/e^rho, H^c = H/e^rho.
/// Fills r.contact_H and returns the reduced contact system.
HamiltonianSystem hamiltonian_reduction(const HamiltonianSystem& full, ReductionResult& r);

/// Lagrangian-route contact Hamiltonian: Legendre-Ostrogradsky transform of
/// L^H with D_L momenta for chi and d_T momenta for the unscaled coordinates.
HamiltonianSystem herglotz_contact_hamiltonian(const ReductionResult& r,
                                               const std::string& prefix = "pi");

/// Contact Hamilton equations of the reduced system; the S row is
/// sum pi dH^c/dpi - H^c.
std::vector<std::pair<Symbol, Expr>> reduced_equations_of_motion(const HamiltonianSystem& contact);

/// Replace each named parameter c_j by the velocity zdot of a fresh dummy
/// coordinate z_<c_j> (order 1); L keeps no dependence on z_<c_j> itself.
LagrangianSystem promote_couplings(const LagrangianSystem& sys,
                                   const std::vector<std::string>& params);

/// Solve the per-coupling base weights w_j so every term of the promoted L
/// scales as kappa^Lambda under the lifted symmetry. Throws when no rational
/// solution exists.
std::map<std::string, Rational> solve_coupling_weights(const LagrangianSystem& promoted,
                                                       const ScalingSymmetry& sym);

/// Add sign * zdot^{lambda_E} to L with lambda_E = -Lambda/B (weight balance);
/// requires a reparameterizing symmetry (B != 0). The new coordinate "z_E" is
/// unscaled by construction (named like promoted couplings, and distinct from
/// a contact action variable "z").
std::pair<LagrangianSystem, Rational> promote_energy(const LagrangianSystem& sys,
                                                     const ScalingSymmetry& sym, int sign = +1);

/// Embed the contact system symplectically: variable y, momenta P = y*pi with
/// P^0_chi = S, H_sym = y*H^c. Position and S rows of the Hamilton equations
/// are checked (proved-equal) against the contact equations.
HamiltonianSystem symplectify(const HamiltonianSystem& contact, const std::string& prefix = "P");

}  // namespace hocr
