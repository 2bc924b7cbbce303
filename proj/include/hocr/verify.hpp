#pragma once

#include "hocr/integrate.hpp"
#include "hocr/models.hpp"

namespace hocr {

struct VerifyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One verification check: a named residual with its tolerance and verdict.
struct CheckResult {
    std::string name;
    std::string kind;  // "symbolic" or "numeric"
    double max_abs = 0.0;
    double max_rel = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string detail;  // which identity / observable the residual measures
};

/// Collection of checks plus the run metadata needed to reproduce them.
struct VerificationReport {
    std::string model;
    std::vector<CheckResult> checks;
    std::map<std::string, std::string> settings;  // tolerances, horizons, integrator

    bool all_pass() const;
    void add(CheckResult c) { checks.push_back(std::move(c)); }
    /// Deterministic merge: checks ordered by name, settings unioned.
    void merge(const VerificationReport& other);

    std::string text() const;  // structured key/value lines
    std::string json() const;  // machine-readable, one object per check
};

/// A model's dynamics compiled to a first-order ODE with its default (or
/// overridden) initial state. Prescribed jets are folded in as explicit
/// functions of time.
struct CompiledModel {
    OdeSystem ode;
    std::vector<double> y0;
    std::string parameterization;  // "physical-time" or "reparameterized"
    Rational repar_exponent = 0;   // 1 - Lambda (dt/dtau = e^{(1-Lambda) rho})
};

/// Full-side dynamics: Hamilton (or contact Hamilton) equations of the
/// unreduced system on the rho chart when a reduction exists, otherwise of
/// the model's own Legendre transform. Initial jet data is mapped through
/// the forward map and the Legendre momenta.
CompiledModel compile_full_dynamics(const ModelDescriptor& m,
                                    const std::map<std::string, double>& overrides = {},
                                    const std::vector<std::pair<Symbol, Expr>>& aux = {});

/// Reduced-side dynamics: contact Hamilton equations of the reduced system.
/// `co_integrate_time` appends rho (rho' = chi) and the physical time t_phys
/// (dt/dtau = e^{(1-Lambda) rho}) as extra states.
CompiledModel compile_reduced_dynamics(const ModelDescriptor& m,
                                       const std::map<std::string, double>& overrides = {},
                                       bool co_integrate_time = false,
                                       const std::vector<std::pair<Symbol, Expr>>& aux = {});

/// Integrate the full system and the reduced system from the same initial
/// data (mapped through the forward map / Legendre momenta) and compare the
/// unscaled observables, chi against the rho jets, and S against
/// e^{-rho} p0_rho at shared dense-output sample times.
VerificationReport cross_check_full_vs_reduced(const ModelDescriptor& m,
                                               const std::map<std::string, double>& ics,
                                               double horizon, double tol);

/// Residual |S' - L^H| along an integration of the model's contact system
/// (S' from the system's own right-hand side, L^H evaluated through the
/// inverse Legendre map).
VerificationReport check_herglotz_condition(const ModelDescriptor& m, double horizon,
                                            double tol);

/// Residual |dH^c/dtau + H^c dH^c/dS| along the contact flow; when the
/// initial data lies on H^c = 0, additionally checks sup |H^c| stays below
/// `surface_tol`.
VerificationReport check_contact_identity(const ModelDescriptor& m, double horizon,
                                          double tol, double surface_tol = 1e-7);

/// Dual-formulation oracle for a first-order contact Lagrangian: integrates
/// the multiplier system ((1+lambda)-weighted Euler-Lagrange equations with
/// dlambda/dt = -(1+lambda) dL/dS, lambda(0) = 0) against the direct
/// Herglotz integration and compares coordinates and S.
VerificationReport appendix_a_multiplier_check(const LagrangianSystem& sys,
                                               const Binding& params,
                                               const std::map<std::string, double>& ics,
                                               double horizon, double tol);

/// Model-independent symbolic identities of the reduction pipeline: symmetry
/// verification, the action/momentum identity S = e^{-rho} p0_rho, agreement
/// of the two contact-Hamiltonian routes, the on-shell Herglotz condition,
/// the contact identity, unscaled-coordinate equivalence, and (where
/// applicable) unit-lapse consistency. Radical-bearing identities may pass
/// numerically; everything else must be proved. The seed drives the
/// sampling-based equivalence prover.
VerificationReport symbolic_residual_suite(const ModelDescriptor& m,
                                           unsigned seed = 20240901);

/// Central-difference divergence of the right-hand-side field at the state.
double divergence(const OdeSystem& sys, const std::vector<double>& y, double t = 0.0);

/// Divergence of the full and reduced vector fields at the model's default
/// initial state: symplectic fields must be divergence-free (|div| <= tol);
/// contact fields report their (generally nonzero) value.
VerificationReport divergence_check(const ModelDescriptor& m, double tol = 1e-6);

/// Every applicable check for the model at its default data.
VerificationReport run_model_suite(const ModelDescriptor& m, double horizon = 5.0,
                                   unsigned seed = 20240901);

}  // namespace hocr
