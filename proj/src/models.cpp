#include "hocr/models.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace hocr {

namespace {

Expr exp_of(Symbol s) { return call(Func::Exp, make_symbol(s)); }

/// Check a derived object against its frozen reference and record the
/// reference in the descriptor. Radical-bearing expressions may only be
/// numerically equal (canonical forms of nested radicals need not match);
/// everything else must be proved equal.
void require_ref(ModelDescriptor& m, const std::string& key, const Expr& derived,
                 const Expr& reference, bool allow_numeric = false) {
    Equivalence e = equivalent(derived, reference);
    bool ok = e == Equivalence::ProvedEqual ||
              (allow_numeric && e == Equivalence::NumericallyEqual);
    if (!ok)
        throw ModelError("model '" + m.name + "': derived object disagrees with reference '" +
                         key + "'");
    m.references[key] = reference;
}

std::map<Symbol, Expr> as_map(const std::vector<std::pair<Symbol, Expr>>& rows) {
    return {rows.begin(), rows.end()};
}

/// Run the whole Lagrangian-side pipeline and both contact routes; checks
/// that the two contact Hamiltonians agree and fills the descriptor's
/// artifact slots.
void run_reduction(ModelDescriptor& m, bool require_hamiltonian = true) {
    SymmetryReport rep = verify_scaling_symmetry(m.system, *m.symmetry);
    if (!rep.verified)
        throw ModelError("model '" + m.name + "': declared scaling symmetry refuted");
    ReductionResult r = build_herglotz_lagrangian(
        reparameterize_and_factor(m.system, *m.symmetry));

    std::optional<HamiltonianSystem> contact, full_rho;
    try {
        contact = herglotz_contact_hamiltonian(r);
        Expr erho = exp_of(r.rho_chart.jet("rho", 0));
        LagrangianSystem lhat{r.rho_chart, simplify(erho * r.f_rho), std::nullopt};
        full_rho = legendre_ostrogradsky(lhat, "p");
    } catch (const std::exception& e) {
        // a coupling promoted to a pure velocity has a cyclic momentum
        // relation the Legendre map cannot invert; the Lagrangian-side
        // reduction artifacts are still valid on their own
        if (require_hamiltonian)
            throw ModelError("model '" + m.name + "': " + e.what());
        contact.reset();
        full_rho.reset();
    }
    if (contact) {
        HamiltonianSystem ham_route = hamiltonian_reduction(*full_rho, r);
        Equivalence agree = equivalent(ham_route.H, contact->H);
        if (agree != Equivalence::ProvedEqual && agree != Equivalence::NumericallyEqual)
            throw ModelError("model '" + m.name + "': contact Hamiltonian routes disagree");
    }

    m.reduction = std::move(r);
    m.rho_hamiltonian = std::move(full_rho);
    m.contact = std::move(contact);
}

/// Default initial data must evaluate the model's symbolic objects without
/// domain errors.
void check_initial_domain(const ModelDescriptor& m) {
    Binding b = m.parameters;
    for (const auto& [name, value] : m.initial) b.set(name, value);
    Binding t0;
    t0.set(m.system.chart.time(), 0.0);
    for (const auto& [sym, expr] : m.prescribed) b.set(sym, evaluate(expr, t0));
    try {
        if (m.initial_chart == "full") {
            evaluate(m.system.L, b);
        } else if (m.reduction) {
            evaluate(m.reduction->f_rho, b);
            evaluate(m.reduction->S_rho, b);
        }
    } catch (const ExprError& err) {
        throw ModelError("model '" + m.name + "': default initial data invalid: " + err.what());
    }
}

Symbol intern_coordinate(const std::string& name) {
    return Symbol::intern(name, SymKind::Coordinate, name, 0);
}

}  // namespace

void ensure_pipeline(ModelDescriptor& m, bool require_hamiltonian) {
    if (!m.symmetry || m.reduction) return;
    run_reduction(m, require_hamiltonian);
}

// ---------------------------------------------------------------------------
// fourth-order oscillator

ModelDescriptor pais_uhlenbeck(double damping, double lambda) {
    if (lambda == 0.0)
        throw std::invalid_argument("pais_uhlenbeck: lambda must be nonzero");
    if (damping < 0.0) throw std::invalid_argument("pais_uhlenbeck: damping must be >= 0");
    const bool damped = damping > 0.0;

    ModelDescriptor m;
    m.name = damped ? "damped-pais-uhlenbeck" : "pais-uhlenbeck";

    JetChart c;
    c.add_coordinate("q", 2);
    c.add_coordinate("theta", 1);
    c.add_parameter("lam");
    if (damped) {
        c.add_parameter("gam");
        c.set_action("z");
    }
    Expr L = c.parse("1/2*q'^2 - 1/2*q^2*theta'^2 - lam/2*q''^2");
    if (damped) L = simplify(L - c.parse("gam*z"));
    m.system = {c, L, damped ? c.action() : std::optional<Symbol>{}};

    // momenta and energy in jet variables
    MomentaSet mom = jacobi_ostrogradsky_momenta(m.system);
    require_ref(m, "momentum_p1_q", mom.at({"q", 1}), c.parse("-lam*q''"));
    // damped case: D_L(-lam*q'') = -lam*q''' - lam*gam*q'', so the gamma
    // correction enters with a plus sign (consistent with the contact row
    // for p1_q below)
    require_ref(m, "momentum_p0_q", mom.at({"q", 0}),
                damped ? c.parse("q' + lam*q''' + lam*gam*q''") : c.parse("q' + lam*q'''"));
    require_ref(m, "momentum_p0_theta", mom.at({"theta", 0}), c.parse("-q^2*theta'"));
    require_ref(m, "energy", energy_function(m.system),
                damped ? c.parse("1/2*q'^2 + lam*q'*q''' + lam*gam*q'*q''"
                                 " - 1/2*q^2*theta'^2 - lam/2*q''^2 + gam*z")
                       : c.parse("1/2*q'^2 + lam*q'*q''' - 1/2*q^2*theta'^2 - lam/2*q''^2"));

    // Legendre transform on the physical-time chart
    HamiltonianSystem h = legendre_ostrogradsky(m.system);
    require_ref(m, "hamiltonian", h.H,
                damped ? h.chart.parse("q'*p0_q - 1/2*q'^2 - 1/(2*q^2)*p0_theta^2"
                                       " - 1/(2*lam)*p1_q^2 + gam*z")
                       : h.chart.parse("q'*p0_q - 1/2*q'^2 - 1/(2*q^2)*p0_theta^2"
                                       " - 1/(2*lam)*p1_q^2"));
    auto rows = as_map(damped ? contact_hamilton_equations(h) : hamilton_equations(h));
    require_ref(m, "full_eom_q", rows.at(c.jet("q", 0)), h.chart.parse("q'"));
    require_ref(m, "full_eom_q'", rows.at(c.jet("q", 1)), h.chart.parse("-1/lam*p1_q"));
    require_ref(m, "full_eom_theta", rows.at(c.jet("theta", 0)),
                h.chart.parse("-1/q^2*p0_theta"));
    if (damped) {
        require_ref(m, "full_eom_p0_q", rows.at(h.momentum("q", 0)),
                    h.chart.parse("-p0_theta^2/q^3 - gam*p0_q"));
        require_ref(m, "full_eom_p1_q", rows.at(h.momentum("q", 1)),
                    h.chart.parse("q' - p0_q - gam*p1_q"));
        require_ref(m, "full_eom_p0_theta", rows.at(h.momentum("theta", 0)),
                    h.chart.parse("-gam*p0_theta"));
        require_ref(m, "full_eom_z", rows.at(*c.action()),
                    h.chart.parse("1/2*(q'^2 - p0_theta^2/q^2 - p1_q^2/lam) - gam*z"));
    } else {
        require_ref(m, "full_eom_p0_q", rows.at(h.momentum("q", 0)),
                    h.chart.parse("-p0_theta^2/q^3"));
        require_ref(m, "full_eom_p1_q", rows.at(h.momentum("q", 1)),
                    h.chart.parse("q' - p0_q"));
        require_ref(m, "full_eom_p0_theta", rows.at(h.momentum("theta", 0)), zero());
    }
    m.full_hamiltonian = std::move(h);

    if (!damped) {
        // reduction pipeline: q -> kappa q, t untouched, L -> kappa^2 L
        m.symmetry = ScalingSymmetry{"q", 1, 0, 2};
        run_reduction(m);
        const ReductionResult& r = *m.reduction;
        require_ref(m, "reduced_core_rho", r.f_rho,
                    r.rho_chart.parse("1/8*rho'^2 - 1/2*theta'^2"
                                      " - lam/32*(4*rho''^2 + 4*rho'^2*rho'' + rho'^4)"));
        require_ref(m, "generalized_action", r.S_expr,
                    r.reduced_chart.parse("1/4*(chi + lam*chi*chi' + lam*chi'')"));
        require_ref(m, "herglotz_lagrangian", r.herglotz_L,
                    r.reduced_chart.parse("1/8*chi^2 - 1/2*theta'^2"
                                          " - lam/32*(4*chi'^2 + 4*chi^2*chi' + chi^4)"
                                          " - chi*S"));
        require_ref(m, "rho_hamiltonian", m.rho_hamiltonian->H,
                    m.rho_hamiltonian->chart.parse(
                        "rho'*p0_rho - 2/(lam*exp(rho))*p1_rho^2 - 1/2*rho'^2*p1_rho"
                        " - exp(rho)/8*rho'^2 - 1/(2*exp(rho))*p0_theta^2"));
        const HamiltonianSystem& hc = *m.contact;
        require_ref(m, "contact_hamiltonian", hc.H,
                    hc.chart.parse("-(1/2*pi0_theta^2 + 1/2*chi^2*pi0_chi"
                                   " + 2/lam*pi0_chi^2 + 1/8*chi^2) + chi*S"));
        require_ref(m, "momentum_pi0_chi", hc.momenta.at({"chi", 0}),
                    r.reduced_chart.parse("-lam/4*chi' - lam/8*chi^2"));

        auto red = as_map(reduced_equations_of_motion(hc));
        require_ref(m, "eom_chi", red.at(hc.chart.jet("chi", 0)),
                    hc.chart.parse("-4/lam*pi0_chi - 1/2*chi^2"));
        require_ref(m, "eom_pi0_chi", red.at(hc.momentum("chi", 0)),
                    hc.chart.parse("1/4*chi - S"));
        require_ref(m, "eom_theta", red.at(hc.chart.jet("theta", 0)),
                    hc.chart.parse("-pi0_theta"));
        require_ref(m, "eom_pi0_theta", red.at(hc.momentum("theta", 0)),
                    hc.chart.parse("-chi*pi0_theta"));
        require_ref(m, "eom_S", red.at(r.action()),
                    hc.chart.parse("1/8*chi^2 - 2/lam*pi0_chi^2 - 1/2*pi0_theta^2 - chi*S"));
    }

    m.parameters.set("lam", lambda);
    if (damped) m.parameters.set("gam", damping);
    m.initial = {{"q", 1.0},     {"q'", 0.1},    {"q''", 0.0}, {"q'''", 0.0},
                 {"theta", 0.0}, {"theta'", 1.0}};
    if (damped) m.initial["z"] = 0.0;
    check_initial_domain(m);
    return m;
}

// ---------------------------------------------------------------------------
// third-order orbit

ModelDescriptor modified_kepler() {
    ModelDescriptor m;
    m.name = "modified-kepler";

    JetChart c;
    c.add_coordinate("r", 3);
    c.add_coordinate("theta", 1);
    m.system = {c, c.parse("1/2*r'^2 + 1/2*r^2*theta'^2 + 1/r + r^(3/4)*r'''^(1/2)"),
                std::nullopt};
    m.symmetry = ScalingSymmetry{"r", 2, 3, -2};
    run_reduction(m);
    const ReductionResult& r = *m.reduction;

    require_ref(m, "reduced_core_rho", r.f_rho,
                r.rho_chart.parse("2*rho'^2 + 1/2*theta'^2 + 1"
                                  " + (2*(rho''' - 6*rho'*rho'' + 4*rho'^3))^(1/2)"));
    require_ref(m, "rho_hamiltonian", m.rho_hamiltonian->H,
                m.rho_hamiltonian->chart.parse(
                    "-exp(rho)*(2*rho'^2 + 1) + 1/(2*exp(rho))*p0_theta^2"
                    " - exp(2*rho)/(2*p2_rho) + rho''*p1_rho + 6*rho'*rho''*p2_rho"
                    " - 4*rho'^3*p2_rho + rho'*p0_rho"),
                /*allow_numeric=*/true);
    const HamiltonianSystem& hc = *m.contact;
    require_ref(m, "contact_hamiltonian", hc.H,
                hc.chart.parse("-2*chi^2 + 1/2*pi0_theta^2 - 1 - 1/(2*pi1_chi)"
                               " + chi'*pi0_chi + 6*chi*chi'*pi1_chi - 4*chi^3*pi1_chi"
                               " + chi*S"));

    // radicand guarding the reduced core; simulations must keep it positive
    m.references["radicand"] =
        r.rho_chart.parse("2*(rho''' - 6*rho'*rho'' + 4*rho'^3)");

    m.initial_chart = "rho";
    // rho''' keeps the radicand comfortably positive while the flow survives
    // comfortably past tau = 2 (larger values hit a finite-time singularity)
    m.initial = {{"rho", 0.0},    {"rho'", 0.1},   {"rho''", 0.05}, {"rho'''", 0.15},
                 {"rho[4]", 0.0}, {"rho[5]", 0.0}, {"theta", 0.0},  {"theta'", 0.5}};
    check_initial_domain(m);
    return m;
}

// ---------------------------------------------------------------------------
// first-order orbit with an additive energy constant

ModelDescriptor kepler_with_energy(int sign) {
    if (sign != 1 && sign != -1)
        throw std::invalid_argument("kepler_with_energy: sign must be +1 or -1");
    ModelDescriptor m;
    m.name = sign > 0 ? "kepler-energy-plus" : "kepler-energy-minus";

    JetChart c;
    c.add_coordinate("r", 1);
    c.add_coordinate("theta", 1);
    c.add_parameter("E");
    Expr base = c.parse("1/2*r'^2 + 1/2*r^2*theta'^2 + 1/r");
    Expr eterm = make_symbol(c.parameter("E"));
    if (sign < 0) eterm = -eterm;
    m.system = {c, simplify(base + eterm), std::nullopt};
    m.symmetry = ScalingSymmetry{"r", 2, 3, -2};

    // the constant blocks the symmetry until it is promoted to a velocity
    auto [prom, lam_E] = promote_energy(m.system, *m.symmetry, sign);
    if (lam_E != Rational(2, 3))
        throw ModelError("model '" + m.name + "': energy exponent is not 2/3");
    m.lambda_E = lam_E;
    m.promoted = prom;

    ReductionResult r = build_herglotz_lagrangian(
        reparameterize_and_factor(prom, *m.symmetry));
    require_ref(m, "reduced_core_rho", r.f_rho,
                r.rho_chart.parse(sign > 0
                                      ? "2*rho'^2 + 1/2*theta'^2 + 1 + z_E'^(2/3)"
                                      : "2*rho'^2 + 1/2*theta'^2 + 1 - z_E'^(2/3)"));
    m.contact = herglotz_contact_hamiltonian(r);
    m.reduction = std::move(r);

    // with the constant switched off the core is the plain first-order one
    LagrangianSystem zeroE{c, simplify(substitute(m.system.L,
                                                  {{c.parameter("E"), zero()}})),
                           std::nullopt};
    ReductionResult r0 = reparameterize_and_factor(zeroE, *m.symmetry);
    require_ref(m, "reduced_core_zero_energy", r0.f_rho,
                r0.rho_chart.parse("2*rho'^2 + 1/2*theta'^2 + 1"));

    const double E0 = 0.05;
    m.parameters.set("E", E0);
    m.initial_chart = "rho";
    // z_E' = E^{3/2} e^{3 rho} keeps the promoted velocity consistent with
    // the energy constant (and constant in physical time)
    m.initial = {{"rho", 0.0},  {"rho'", 0.1}, {"theta", 0.0}, {"theta'", 0.6},
                 {"z_E", 0.0},  {"z_E'", std::pow(E0, 1.5)}};
    check_initial_domain(m);
    return m;
}

// ---------------------------------------------------------------------------
// cosmological volume/scalar system

Expr default_flrw_potential() {
    Symbol phi = intern_coordinate("phi");
    return mul({make_rational(Rational(1, 2)), pow_expr(make_symbol(phi), 2)});
}

Expr default_flrw_lapse() {
    Symbol t = Symbol::intern("t", SymKind::Time);
    return add({one(), mul({make_rational(Rational(1, 10)),
                            call(Func::Sin, make_symbol(t))})});
}

namespace {

void check_potential(const Expr& V) {
    for (Symbol s : free_symbols(V))
        if (s.name() != "phi")
            throw std::invalid_argument(
                "the potential must depend only on 'phi' (found '" + s.name() + "')");
}

}  // namespace

ModelDescriptor flrw_fr(const Expr& potential) {
    check_potential(potential);
    ModelDescriptor m;
    m.name = "flrw";

    JetChart c;
    c.add_coordinate("v", 2);
    c.add_coordinate("phi", 2);
    c.add_parameter("piG");
    c.add_parameter("lam");
    const Expr V = simplify(potential);
    Expr L = simplify(
        c.parse("-1/(24*piG)*v'^2/v"
                " - lam/(4*piG)*(v''^2/v - 4*v''*v'^2/(3*v^2) + 5*v'^4/(9*v^3))"
                " + v*(1/2*phi''^2 + 1/2*phi'^2)") -
        c.parse("v") * V);
    m.system = {c, L, std::nullopt};
    m.symmetry = ScalingSymmetry{"v", 1, 0, 1};
    run_reduction(m);
    const ReductionResult& r = *m.reduction;

    require_ref(m, "reduced_core_rho", r.f_rho,
                simplify(r.rho_chart.parse(
                             "-1/(72*piG)*(3*rho'^2 + 2*lam*(2*rho'^4 + 6*rho'^2*rho''"
                             " + 9*rho''^2)) + 1/2*phi''^2 + 1/2*phi'^2") -
                         V));
    require_ref(m, "generalized_action_rho", r.S_rho,
                r.rho_chart.parse("-1/(12*piG)*rho'"
                                  " + lam/(2*piG)*(rho''' + rho'*rho'' - rho'^3/9)"));
    require_ref(m, "herglotz_lagrangian", r.herglotz_L,
                simplify(r.reduced_chart.parse(
                             "-1/(72*piG)*(3*chi^2 + 2*lam*(2*chi^4 + 6*chi^2*chi'"
                             " + 9*chi'^2)) + 1/2*phi''^2 + 1/2*phi'^2 - chi*S") -
                         V));

    const HamiltonianSystem& hc = *m.contact;
    require_ref(m, "momentum_pi0_chi", hc.momenta.at({"chi", 0}),
                r.reduced_chart.parse("-lam/(6*piG)*(chi^2 + 3*chi')"));
    require_ref(m, "momentum_pi1_phi", hc.momenta.at({"phi", 1}),
                r.reduced_chart.parse("phi''"));
    require_ref(m, "momentum_pi0_phi", hc.momenta.at({"phi", 0}),
                r.reduced_chart.parse("phi' - phi'''"));
    require_ref(m, "contact_hamiltonian", hc.H,
                simplify(hc.chart.parse(
                             "1/(72*piG)*(3*chi^2 + 2*lam*chi^4) - 1/3*chi^2*pi0_chi"
                             " - piG/lam*pi0_chi^2 + phi'*pi0_phi - 1/2*phi'^2"
                             " + 1/2*pi1_phi^2 + chi*S") +
                         V));

    Expr dV = differentiate(V, c.jet("phi", 0));
    auto red = as_map(reduced_equations_of_motion(hc));
    require_ref(m, "eom_chi", red.at(hc.chart.jet("chi", 0)),
                hc.chart.parse("-1/3*chi^2 - 2*piG/lam*pi0_chi"));
    require_ref(m, "eom_pi0_chi", red.at(hc.momentum("chi", 0)),
                hc.chart.parse("-1/(36*piG)*(3*chi + 4*lam*chi^3) - 1/3*chi*pi0_chi - S"));
    require_ref(m, "eom_pi0_phi", red.at(hc.momentum("phi", 0)),
                simplify(hc.chart.parse("-chi*pi0_phi") - dV));
    require_ref(m, "eom_pi1_phi", red.at(hc.momentum("phi", 1)),
                hc.chart.parse("-pi0_phi + phi' - chi*pi1_phi"));
    require_ref(m, "eom_S", red.at(r.action()),
                simplify(hc.chart.parse(
                             "-1/(72*piG)*(3*chi^2 + 2*lam*chi^4) - piG/lam*pi0_chi^2"
                             " + 1/2*phi'^2 + 1/2*pi1_phi^2 - chi*S") -
                         V));

    require_ref(m, "rho_hamiltonian", m.rho_hamiltonian->H,
                simplify(m.rho_hamiltonian->chart.parse(
                             "exp(rho)/(72*piG)*(3*rho'^2 + 2*lam*rho'^4) + rho'*p0_rho"
                             " - 1/3*rho'^2*p1_rho - piG/lam/exp(rho)*p1_rho^2"
                             " + phi'*p0_phi - exp(rho)*1/2*phi'^2"
                             " + 1/(2*exp(rho))*p1_phi^2") +
                         exp_of(r.rho_chart.jet("rho", 0)) * V));

    // third-order evolution of chi from the action condition S' = f - chi S
    Expr residual = simplify(d_T(r.S_rho, r.rho_chart) - r.f_rho +
                             make_symbol(r.rho_chart.jet("rho", 1)) * r.S_rho);
    auto solved = solve_top_derivative(residual, r.rho_chart, "rho");
    if (!solved) throw ModelError("model 'flrw': action condition not solvable");
    require_ref(m, "chi_equation", *solved,
                simplify(r.rho_chart.parse(
                             "1/(12*lam)*(rho'^2 + 2*rho'') - rho'^2*rho''"
                             " - 3/2*rho''^2 - 2*rho'*rho'''"
                             " + 2*piG/lam*(1/2*phi''^2 + 1/2*phi'^2)") -
                         c.parse("2*piG/lam") * V));

    m.parameters.set("piG", 1.0);
    m.parameters.set("lam", 0.05);
    // expanding data chosen so the volume survives past t = 5 before the
    // scalar field drives recollapse
    m.initial = {{"v", 1.0},   {"v'", 0.6},   {"v''", 0.0}, {"v'''", 0.0},
                 {"phi", 0.2}, {"phi'", 0.1}, {"phi''", 0.0}};
    // the energy E_L is linear in phi'''; solve E_L = 0 so the reduced
    // contact Hamiltonian vanishes along the default trajectory
    {
        Expr EL = energy_function(m.system);
        Binding b = m.parameters;
        for (const auto& [name, value] : m.initial) b.set(name, value);
        b.set("phi'''", 0.0);
        double e0 = evaluate(EL, b);
        double slope = evaluate(differentiate(EL, c.jet("phi", 3)), b);
        m.initial["phi'''"] = -e0 / slope;
    }
    check_initial_domain(m);
    return m;
}

ModelDescriptor flrw_general_lapse(const Expr& lapse, const Expr& potential) {
    check_potential(potential);
    Symbol t = Symbol::intern("t", SymKind::Time);
    for (Symbol s : free_symbols(lapse))
        if (s != t)
            throw std::invalid_argument(
                "the lapse must depend only on 't' (found '" + s.name() + "')");
    // strict positivity at the probe points of the default window
    for (int i = 0; i <= 10; ++i) {
        Binding b;
        b.set(t, 0.5 * i);
        if (evaluate(lapse, b) <= 0.0)
            throw std::invalid_argument("the lapse must be strictly positive (fails at t = " +
                                        std::to_string(0.5 * i) + ")");
    }

    ModelDescriptor m;
    m.name = "flrw-lapse";

    JetChart c;
    c.add_coordinate("v", 2);
    c.add_coordinate("phi", 2);
    c.add_coordinate("N", 2, /*prescribed=*/true);
    c.add_parameter("piG");
    c.add_parameter("lam");
    const Expr V = simplify(potential);
    Expr L = simplify(
        c.parse("-1/(24*piG)*v'^2/(v*N)"
                " - lam/(4*piG)*(v''^2/(v*N^3) - v'^4/(3*v^3*N^3)"
                " - 2*v'*v''*N'/(v*N^4) + v'^2*N'^2/(v*N^5))"
                " + v*N*(1/2*phi''^2 + 1/2*phi'^2)") -
        c.parse("v*N") * V);
    m.system = {c, L, std::nullopt};
    m.symmetry = ScalingSymmetry{"v", 1, 0, 1};
    run_reduction(m);
    const ReductionResult& r = *m.reduction;

    // differentiate the lapse in t by routing through an auxiliary symbol
    // (the time symbol itself is not a differentiation variable)
    Symbol u = Symbol::intern("_model_time", SymKind::Auxiliary);
    auto time_derivative = [&](const Expr& e) {
        Expr in_u = substitute(e, {{t, make_symbol(u)}});
        return simplify(substitute(differentiate(in_u, u), {{u, make_symbol(t)}}));
    };
    m.prescribed[c.jet("N", 0)] = simplify(lapse);
    for (int a = 1; a <= 4; ++a)
        m.prescribed[c.jet("N", a)] = time_derivative(m.prescribed[c.jet("N", a - 1)]);

    require_ref(m, "reduced_core_rho", r.f_rho,
                simplify(r.rho_chart.parse(
                             "-(1/(24*piG)*rho'^2/N"
                             " + lam/(4*piG)*(N'^2*rho'^2/N^5"
                             " - 2*N'*rho'*(rho'^2 + rho'')/N^4"
                             " + (2*rho'^2*(rho'^2 + 3*rho'') + 3*rho''^2)/(3*N^3))"
                             " - N*(1/2*phi''^2 + 1/2*phi'^2))") -
                         r.rho_chart.parse("N") * V));
    require_ref(m, "generalized_action_rho", r.S_rho,
                r.rho_chart.parse("-1/(12*piG)*rho'/N"
                                  " + lam/(2*piG)*(3*N'^2*rho'/N^5"
                                  " - (N''*rho' + N'*(3*rho'' + rho'^2))/N^4"
                                  " + (3*rho''' - rho'^3 + 3*rho''*rho')/(3*N^3))"));
    require_ref(m, "herglotz_lagrangian", r.herglotz_L,
                simplify(r.reduced_chart.parse(
                             "-1/(24*piG)*chi^2/N"
                             " - lam/(4*piG)*(N'^2*chi^2/N^5"
                             " - 2*N'*chi*(chi^2 + chi')/N^4"
                             " + (2*chi^2*(chi^2 + 3*chi') + 3*chi'^2)/(3*N^3))"
                             " + N*(1/2*phi''^2 + 1/2*phi'^2) - chi*S") -
                         r.reduced_chart.parse("N") * V));

    const HamiltonianSystem& hc = *m.contact;
    require_ref(m, "momentum_pi0_chi", hc.momenta.at({"chi", 0}),
                r.reduced_chart.parse("lam/(2*piG*N^3)*(N'*chi/N - chi^2 - chi')"));
    require_ref(m, "momentum_pi1_phi", hc.momenta.at({"phi", 1}),
                r.reduced_chart.parse("N*phi''"));
    require_ref(m, "momentum_pi0_phi", hc.momenta.at({"phi", 0}),
                r.reduced_chart.parse("N*phi' - N*phi''' - N'*phi''"));

    // third-order evolution of chi from the action condition
    Expr residual = simplify(d_T(r.S_rho, r.rho_chart) - r.f_rho +
                             make_symbol(r.rho_chart.jet("rho", 1)) * r.S_rho);
    auto solved = solve_top_derivative(residual, r.rho_chart, "rho");
    if (!solved) throw ModelError("model 'flrw-lapse': action condition not solvable");
    m.references["chi_equation"] = *solved;

    // unit-lapse limit: the proper-time model is reproduced exactly. Its
    // dynamics coincide; the cores differ by the recorded total-derivative
    // gauge term (boundary terms were discarded differently).
    ModelDescriptor proper = flrw_fr(potential);
    std::map<Symbol, Expr> unit;
    unit[c.jet("N", 0)] = one();
    for (int a = 1; a <= 4; ++a) unit[c.jet("N", a)] = zero();
    Expr chi_unit = simplify(substitute(*solved, unit));
    require_ref(m, "chi_equation_unit_lapse", chi_unit, proper.references.at("chi_equation"));
    Expr offset = simplify(substitute(r.herglotz_L, unit) -
                           proper.reduction->herglotz_L);
    require_ref(m, "herglotz_gauge_offset", offset,
                r.reduced_chart.parse("-lam/(9*piG)*(3*chi^2*chi' + chi^4)"));

    m.parameters = proper.parameters;
    m.initial = proper.initial;
    check_initial_domain(m);
    return m;
}

// ---------------------------------------------------------------------------
// catalog

std::vector<std::string> builtin_model_names() {
    return {"pais-uhlenbeck", "damped-pais-uhlenbeck", "modified-kepler",
            "kepler-energy-plus", "kepler-energy-minus", "flrw", "flrw-lapse"};
}

ModelDescriptor builtin_model(const std::string& name) {
    if (name == "pais-uhlenbeck") return pais_uhlenbeck(0.0);
    if (name == "damped-pais-uhlenbeck") return pais_uhlenbeck(0.1);
    if (name == "modified-kepler") return modified_kepler();
    if (name == "kepler-energy-plus") return kepler_with_energy(+1);
    if (name == "kepler-energy-minus") return kepler_with_energy(-1);
    if (name == "flrw") return flrw_fr(default_flrw_potential());
    if (name == "flrw-lapse")
        return flrw_general_lapse(default_flrw_lapse(), default_flrw_potential());
    throw ModelError("unknown model '" + name + "'");
}

// ---------------------------------------------------------------------------
// model file format

namespace {

[[noreturn]] void fail_line(int line, const std::string& msg) {
    throw ModelError("line " + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

Rational parse_rational(const std::string& text, int line) {
    try {
        size_t slash = text.find('/');
        if (slash == std::string::npos) return Rational(Int(text));
        Int num(trim(text.substr(0, slash)));
        Int den(trim(text.substr(slash + 1)));
        if (den == 0) fail_line(line, "zero denominator in '" + text + "'");
        return Rational(num, den);
    } catch (const std::runtime_error&) {
        fail_line(line, "malformed rational '" + text + "'");
    }
}

double parse_double(const std::string& text, int line) {
    try {
        size_t used = 0;
        double v = std::stod(text, &used);
        if (trim(text.substr(used)).empty()) return v;
    } catch (const std::exception&) {
    }
    fail_line(line, "malformed number '" + text + "'");
}

struct Line {
    int number;
    std::string text;
};

}  // namespace

ModelDescriptor load_model(std::istream& in, const std::string& name) {
    std::map<std::string, std::vector<Line>> sections;
    std::string section;
    std::string raw;
    int number = 0;
    while (std::getline(in, raw)) {
        ++number;
        std::string text = trim(raw.substr(0, raw.find('#')));
        if (text.empty()) continue;
        if (text.front() == '[') {
            if (text.back() != ']') fail_line(number, "unterminated section header");
            section = text.substr(1, text.size() - 2);
            static const std::set<std::string> known{"coordinates", "parameters", "lagrangian",
                                                    "symmetry",    "contact",    "initial"};
            if (!known.count(section)) fail_line(number, "unknown section '" + section + "'");
            sections[section];  // register even when empty
            continue;
        }
        if (section.empty()) fail_line(number, "content before the first section header");
        sections[section].push_back({number, text});
    }

    if (!sections.count("coordinates") || sections["coordinates"].empty())
        throw ModelError("model file needs a non-empty [coordinates] section");
    if (!sections.count("lagrangian") || sections["lagrangian"].empty())
        throw ModelError("model file needs a non-empty [lagrangian] section");

    ModelDescriptor m;
    m.name = name;
    JetChart c;
    for (const auto& line : sections["coordinates"]) {
        size_t colon = line.text.find(':');
        if (colon == std::string::npos)
            fail_line(line.number, "expected 'name: order [prescribed]'");
        std::string cname = trim(line.text.substr(0, colon));
        std::istringstream rest(line.text.substr(colon + 1));
        int order = 0;
        std::string flag;
        if (!(rest >> order)) fail_line(line.number, "malformed coordinate order");
        rest >> flag;
        bool prescribed = flag == "prescribed";
        if (!flag.empty() && !prescribed)
            fail_line(line.number, "unknown coordinate flag '" + flag + "'");
        try {
            c.add_coordinate(cname, order, prescribed);
        } catch (const std::exception& e) {
            fail_line(line.number, e.what());
        }
    }
    for (const auto& line : sections["parameters"]) {
        size_t eq = line.text.find('=');
        std::string pname = trim(eq == std::string::npos ? line.text : line.text.substr(0, eq));
        if (pname.empty()) fail_line(line.number, "empty parameter name");
        try {
            c.add_parameter(pname);
        } catch (const std::exception& e) {
            fail_line(line.number, e.what());
        }
        if (eq != std::string::npos)
            m.parameters.set(c.parameter(pname),
                             parse_double(trim(line.text.substr(eq + 1)), line.number));
    }

    std::optional<Symbol> action;
    std::vector<Line> contact_terms;
    if (sections.count("contact")) {
        for (const auto& line : sections["contact"]) {
            size_t eq = line.text.find('=');
            std::string key = trim(eq == std::string::npos ? line.text : line.text.substr(0, eq));
            if (key == "action") {
                if (eq == std::string::npos) fail_line(line.number, "expected 'action = name'");
                try {
                    c.set_action(trim(line.text.substr(eq + 1)));
                } catch (const std::exception& e) {
                    fail_line(line.number, e.what());
                }
                action = c.action();
            } else {
                contact_terms.push_back(line);
            }
        }
        if (!action)
            throw ModelError("[contact] section needs an 'action = name' line");
    }

    std::string lag_text;
    int lag_line = sections["lagrangian"].front().number;
    for (const auto& line : sections["lagrangian"]) {
        if (!lag_text.empty()) lag_text += ' ';
        lag_text += line.text;
    }
    Expr L;
    try {
        L = c.parse(lag_text);
    } catch (const ExprError& e) {
        fail_line(lag_line, std::string("bad Lagrangian: ") + e.what());
    }
    for (const auto& line : contact_terms) {
        try {
            L = simplify(L + c.parse(line.text));
        } catch (const ExprError& e) {
            fail_line(line.number, std::string("bad contact term: ") + e.what());
        }
    }
    m.system = {c, L, action};

    if (sections.count("symmetry")) {
        ScalingSymmetry sym;
        bool have_coord = false, have_A = false, have_L = false;
        for (const auto& line : sections["symmetry"]) {
            size_t eq = line.text.find('=');
            if (eq == std::string::npos) fail_line(line.number, "expected 'key = value'");
            std::string key = trim(line.text.substr(0, eq));
            std::string value = trim(line.text.substr(eq + 1));
            if (key == "coordinate") {
                if (!c.has_coordinate(value))
                    fail_line(line.number, "unknown coordinate '" + value + "'");
                sym.coordinate = value;
                have_coord = true;
            } else if (key == "A") {
                sym.A = parse_rational(value, line.number);
                have_A = true;
            } else if (key == "B") {
                sym.B = parse_rational(value, line.number);
            } else if (key == "Lambda") {
                sym.Lambda = parse_rational(value, line.number);
                have_L = true;
            } else if (key.rfind("weight ", 0) == 0) {
                std::string wname = trim(key.substr(7));
                if (!c.has_coordinate(wname))
                    fail_line(line.number, "unknown coordinate '" + wname + "'");
                sym.extra_weights[wname] = parse_rational(value, line.number);
            } else {
                fail_line(line.number, "unknown symmetry key '" + key + "'");
            }
        }
        if (!have_coord || !have_A || !have_L)
            throw ModelError("[symmetry] needs at least coordinate, A, and Lambda");
        m.symmetry = sym;
    }

    for (const auto& line : sections["initial"]) {
        size_t eq = line.text.find('=');
        if (eq == std::string::npos) fail_line(line.number, "expected 'symbol = value'");
        std::string sname = trim(line.text.substr(0, eq));
        try {
            Symbol::lookup(sname);
        } catch (const std::exception&) {
            fail_line(line.number, "unknown symbol '" + sname + "'");
        }
        m.initial[sname] = parse_double(trim(line.text.substr(eq + 1)), line.number);
    }
    return m;
}

ModelDescriptor load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open model file '" + path + "'");
    size_t slash = path.find_last_of('/');
    std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
    size_t dot = base.find_last_of('.');
    if (dot != std::string::npos && dot > 0) base = base.substr(0, dot);
    return load_model(in, base);
}

}  // namespace hocr
