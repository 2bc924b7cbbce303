#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hocr/reduce.hpp"

using namespace hocr;

namespace {

// fourth-order oscillator with an angular spectator; scale-invariant with
// q -> kappa q, t untouched, L -> kappa^2 L
LagrangianSystem osc4_system() {
    JetChart c;
    c.add_coordinate("q", 2);
    c.add_coordinate("theta", 1);
    c.add_parameter("lam");
    return {c, c.parse("1/2*q'^2 - 1/2*q^2*theta'^2 - lam/2*q''^2"), std::nullopt};
}

ScalingSymmetry osc4_symmetry() { return {"q", 1, 0, 2}; }

// third-order central-force system; r -> kappa^2 r, t -> kappa^3 t,
// L -> kappa^-2 L
LagrangianSystem orbit3_system() {
    JetChart c;
    c.add_coordinate("r", 3);
    c.add_coordinate("theta", 1);
    return {c, c.parse("1/2*r'^2 + 1/2*r^2*theta'^2 + 1/r + r^(3/4)*r'''^(1/2)"),
            std::nullopt};
}

ScalingSymmetry orbit3_symmetry() { return {"r", 2, 3, -2}; }

// first-order version of the same orbit problem
LagrangianSystem orbit1_system() {
    JetChart c;
    c.add_coordinate("r", 1);
    c.add_coordinate("theta", 1);
    return {c, c.parse("1/2*r'^2 + 1/2*r^2*theta'^2 + 1/r"), std::nullopt};
}

bool proved(const Expr& a, const Expr& b) {
    return equivalent(a, b) == Equivalence::ProvedEqual;
}

}  // namespace

TEST_CASE("scaling symmetry verification") {
    LagrangianSystem sys = osc4_system();
    SymmetryReport ok = verify_scaling_symmetry(sys, osc4_symmetry());
    CHECK(ok.verified);
    CHECK(ok.evidence == Equivalence::ProvedEqual);

    SymmetryReport bad = verify_scaling_symmetry(sys, {"q", 1, 0, 1});
    CHECK_FALSE(bad.verified);
    CHECK_FALSE(bad.witness.values.empty());

    SymmetryReport orbit = verify_scaling_symmetry(orbit3_system(), orbit3_symmetry());
    CHECK(orbit.verified);
}

TEST_CASE("symmetry invariants are enforced") {
    LagrangianSystem sys = osc4_system();
    CHECK_THROWS_AS(verify_scaling_symmetry(sys, {"q", 0, 0, 2}), std::invalid_argument);
    // reparameterizing symmetries must satisfy B + Lambda = 1
    CHECK_THROWS_AS(verify_scaling_symmetry(sys, {"q", 1, 3, 3}), std::invalid_argument);
}

TEST_CASE("lifted jet weights") {
    LagrangianSystem sys = orbit3_system();
    auto w = lift_symmetry(orbit3_symmetry(), sys.chart);
    CHECK(w.at(sys.chart.jet("r", 0)) == Rational(2));
    CHECK(w.at(sys.chart.jet("r", 1)) == Rational(-1));
    CHECK(w.at(sys.chart.jet("r", 2)) == Rational(-4));
    CHECK(w.at(sys.chart.jet("r", 3)) == Rational(-7));
    CHECK(w.at(sys.chart.jet("r", 4)) == Rational(-10));
    CHECK(w.at(sys.chart.jet("r", 5)) == Rational(-13));
    CHECK(w.at(sys.chart.jet("theta", 1)) == Rational(-3));

    LagrangianSystem osc = osc4_system();
    auto v = lift_symmetry(osc4_symmetry(), osc.chart);
    CHECK(v.at(osc.chart.jet("q", 3)) == Rational(1));
    CHECK(v.at(osc.chart.jet("theta", 1)) == Rational(0));
}

TEST_CASE("non-reparameterizing reduction (oscillator)") {
    LagrangianSystem sys = osc4_system();
    ReductionResult r = reparameterize_and_factor(sys, osc4_symmetry());
    CHECK(r.k == 2);
    CHECK_FALSE(r.reparameterized);
    CHECK(r.repar_exponent == Rational(0));

    Expr f_expected = r.rho_chart.parse(
        "1/8*rho'^2 - 1/2*theta'^2 - lam/32*(4*rho''^2 + 4*rho'^2*rho'' + rho'^4)");
    CHECK(proved(r.f_rho, f_expected));

    // forward map: rho = 2 log q, rho' = 2 q'/q
    CHECK(proved(r.forward_map.at(r.rho_chart.jet("rho", 1)), sys.chart.parse("2*q'/q")));

    // unscaled equivalence: e^rho f_rho pulled back along the forward map is L
    Expr pulled = simplify(substitute(r.f_rho, r.forward_map) * sys.chart.parse("q^2"));
    CHECK(proved(pulled, sys.L));

    r = build_herglotz_lagrangian(std::move(r));
    Expr S_expected = r.reduced_chart.parse("1/4*(chi + lam*chi*chi' + lam*chi'')");
    CHECK(proved(r.S_expr, S_expected));
    Expr f_chi = r.reduced_chart.parse(
        "1/8*chi^2 - 1/2*theta'^2 - lam/32*(4*chi'^2 + 4*chi^2*chi' + chi^4)");
    CHECK(proved(r.f, f_chi));
    CHECK(proved(r.herglotz_L, simplify(r.f - make_symbol(r.chi(0)) * make_symbol(r.action()))));
}

TEST_CASE("a wrongly declared symmetry is rejected") {
    JetChart c;
    c.add_coordinate("q", 1);
    LagrangianSystem sys{c, c.parse("1/2*q'^2 + q^3"), std::nullopt};
    CHECK_THROWS_AS(reparameterize_and_factor(sys, {"q", 1, 0, 2}), ReductionError);
}

TEST_CASE("oscillator contact Hamiltonian, both routes") {
    ReductionResult r = build_herglotz_lagrangian(
        reparameterize_and_factor(osc4_system(), osc4_symmetry()));

    HamiltonianSystem lag_route = herglotz_contact_hamiltonian(r);
    Expr golden = lag_route.chart.parse(
        "-(1/2*pi0_theta^2 + 1/2*chi^2*pi0_chi + 2/lam*pi0_chi^2 + 1/8*chi^2) + chi*S");
    CHECK(proved(lag_route.H, golden));

    // Hamiltonian route: Legendre transform of Lhat = e^rho f, then reduce
    Expr erho = call(Func::Exp, make_symbol(r.rho_chart.jet("rho", 0)));
    LagrangianSystem lhat{r.rho_chart, simplify(erho * r.f_rho), std::nullopt};
    HamiltonianSystem full = legendre_ostrogradsky(lhat, "p");

    // the generalized action is the scaled zeroth momentum of Lhat
    CHECK(proved(full.momenta.at({"rho", 0}), simplify(erho * r.S_rho)));

    HamiltonianSystem ham_route = hamiltonian_reduction(full, r);
    CHECK(proved(ham_route.H, lag_route.H));
    CHECK(proved(r.contact_H, golden));
    CHECK(ham_route.contact());
    // pulled-back Legendre data: pi0_chi as a function of (chi, chi', chi'')
    CHECK(proved(ham_route.momenta.at({"chi", 0}),
                 r.reduced_chart.parse("-lam/4*chi' - lam/8*chi^2")));
    CHECK(proved(ham_route.momenta.at({"S", 0}), r.S_expr));
}

TEST_CASE("oscillator reduced equations of motion") {
    ReductionResult r = build_herglotz_lagrangian(
        reparameterize_and_factor(osc4_system(), osc4_symmetry()));
    HamiltonianSystem h = herglotz_contact_hamiltonian(r);
    auto eqs = reduced_equations_of_motion(h);
    std::map<Symbol, Expr> rhs(eqs.begin(), eqs.end());

    const JetChart& c = h.chart;
    Symbol pi_chi = h.momentum("chi", 0);
    Symbol pi_theta = h.momentum("theta", 0);
    CHECK(proved(rhs.at(c.jet("chi", 0)), c.parse("-4/lam*pi0_chi - 1/2*chi^2")));
    CHECK(proved(rhs.at(pi_chi), c.parse("1/4*chi - S")));
    CHECK(proved(rhs.at(c.jet("theta", 0)), c.parse("-pi0_theta")));
    CHECK(proved(rhs.at(pi_theta), c.parse("-chi*pi0_theta")));
    CHECK(proved(rhs.at(r.action()),
                 c.parse("1/8*chi^2 - 2/lam*pi0_chi^2 - 1/2*pi0_theta^2 - chi*S")));

    // the action equation, with momenta eliminated, is the Herglotz Lagrangian
    std::map<Symbol, Expr> elim;
    for (const auto& [key, expr] : h.momenta)
        if (key.first != "S") elim[h.momentum(key.first, key.second)] = expr;
    CHECK(proved(simplify(substitute(rhs.at(r.action()), elim)), r.herglotz_L));
}

TEST_CASE("oscillator Herglotz variational equations") {
    ReductionResult r = build_herglotz_lagrangian(
        reparameterize_and_factor(osc4_system(), osc4_symmetry()));
    LagrangianSystem contact{r.reduced_chart, r.herglotz_L, r.action()};
    auto eqs = herglotz_equations(contact);
    std::map<std::string, Expr> res(eqs.begin(), eqs.end());

    // the chi residual closes once S takes its on-shell value
    Expr closed = substitute(res.at("chi"), {{r.action(), r.S_expr}});
    CHECK(is_zero(simplify(closed)));

    // spectator equation theta'' = -chi theta'
    CHECK(proved(res.at("theta"), r.reduced_chart.parse("theta'' + chi*theta'")));
}

TEST_CASE("oscillator symplectification") {
    ReductionResult r = build_herglotz_lagrangian(
        reparameterize_and_factor(osc4_system(), osc4_symmetry()));
    HamiltonianSystem contact = herglotz_contact_hamiltonian(r);
    HamiltonianSystem sp = symplectify(contact);  // throws if any row disagrees
    REQUIRE(sp.pairs.size() == contact.pairs.size() + 1);
    CHECK_FALSE(sp.contact());

    // H_sym(y, q, P = y pi, P0 = S) = y H^c(q, pi, S)
    Binding at;
    at.set("chi", 0.3);
    at.set("lam", 0.1);
    at.set("S", 0.7);
    at.set("y", 2.0);
    at.set("P0_chi", 0.7);
    at.set("P1_chi", 2.0 * 0.4);
    at.set("P0_theta", 2.0 * 0.5);
    Binding cat;
    cat.set("chi", 0.3);
    cat.set("lam", 0.1);
    cat.set("S", 0.7);
    cat.set("pi0_chi", 0.4);
    cat.set("pi0_theta", 0.5);
    CHECK(evaluate(sp.H, at) == doctest::Approx(2.0 * evaluate(contact.H, cat)).epsilon(1e-14));
}

TEST_CASE("reparameterizing reduction (third-order orbit)") {
    LagrangianSystem sys = orbit3_system();
    ReductionResult r = reparameterize_and_factor(sys, orbit3_symmetry());
    CHECK(r.k == 3);
    CHECK(r.reparameterized);
    CHECK(r.repar_exponent == Rational(-3));

    Expr f_expected = r.rho_chart.parse(
        "2*rho'^2 + 1/2*theta'^2 + 1 + (2*(rho''' - 6*rho'*rho'' + 4*rho'^3))^(1/2)");
    CHECK(proved(r.f_rho, f_expected));

    // forward map: rho = 1/2 log r, tau-derivatives carry the e^{B rho} factor
    CHECK(proved(r.forward_map.at(r.rho_chart.jet("rho", 1)),
                 sys.chart.parse("1/2*r^(1/2)*r'")));
    CHECK(proved(r.forward_map.at(r.rho_chart.jet("theta", 1)),
                 sys.chart.parse("r^(3/2)*theta'")));

    // unscaled equivalence: f_rho pulled back is e^{-rho} e^{B rho} L = r L
    Expr pulled = simplify(substitute(r.f_rho, r.forward_map));
    CHECK(proved(pulled, simplify(sys.chart.parse("r") * sys.L)));
}

TEST_CASE("orbit contact Hamiltonian, both routes") {
    ReductionResult r = build_herglotz_lagrangian(
        reparameterize_and_factor(orbit3_system(), orbit3_symmetry()));

    HamiltonianSystem lag_route = herglotz_contact_hamiltonian(r);
    Expr golden = lag_route.chart.parse(
        "-2*chi^2 + 1/2*pi0_theta^2 - 1 - 1/(2*pi1_chi) + chi'*pi0_chi"
        " + 6*chi*chi'*pi1_chi - 4*chi^3*pi1_chi + chi*S");
    CHECK(proved(lag_route.H, golden));

    Expr erho = call(Func::Exp, make_symbol(r.rho_chart.jet("rho", 0)));
    LagrangianSystem lhat{r.rho_chart, simplify(erho * r.f_rho), std::nullopt};
    HamiltonianSystem full = legendre_ostrogradsky(lhat, "p");
    CHECK(proved(full.momenta.at({"rho", 0}), simplify(erho * r.S_rho)));

    HamiltonianSystem ham_route = hamiltonian_reduction(full, r);
    CHECK(proved(ham_route.H, lag_route.H));

    // action equation vs Herglotz Lagrangian
    auto eqs = reduced_equations_of_motion(lag_route);
    std::map<Symbol, Expr> rhs(eqs.begin(), eqs.end());
    std::map<Symbol, Expr> elim;
    for (const auto& [key, expr] : lag_route.momenta)
        elim[lag_route.momentum(key.first, key.second)] = expr;
    CHECK(proved(simplify(substitute(rhs.at(r.action()), elim)), r.herglotz_L));

    // symplectification passes its internal row checks
    HamiltonianSystem sp = symplectify(lag_route);
    CHECK(sp.pairs.size() == lag_route.pairs.size() + 1);
}

TEST_CASE("first-order reduction eliminates the algebraic chi") {
    ReductionResult r = build_herglotz_lagrangian(
        reparameterize_and_factor(orbit1_system(), orbit3_symmetry()));
    CHECK(r.k == 1);
    CHECK(proved(r.f, r.reduced_chart.parse("2*chi^2 + 1/2*theta'^2 + 1")));
    CHECK(proved(r.S_expr, r.reduced_chart.parse("4*chi")));

    HamiltonianSystem h = herglotz_contact_hamiltonian(r);
    CHECK(proved(h.H, h.chart.parse("1/2*pi0_theta^2 + 1/8*S^2 - 1")));
    CHECK(proved(h.top_inverse.at(r.chi(0)), h.chart.parse("S/4")));
}

TEST_CASE("energy promotion") {
    JetChart c;
    c.add_coordinate("r", 1);
    c.add_coordinate("theta", 1);
    c.add_parameter("E");
    LagrangianSystem sys{c, c.parse("1/2*r'^2 + 1/2*r^2*theta'^2 + 1/r + E"), std::nullopt};

    auto [prom, lam_E] = promote_energy(sys, orbit3_symmetry());
    CHECK(lam_E == Rational(2, 3));
    CHECK(prom.chart.has_coordinate("z_E"));
    CHECK_FALSE(contains_symbol(prom.L, c.parameter("E")));

    ReductionResult r = reparameterize_and_factor(prom, orbit3_symmetry());
    CHECK(proved(r.f_rho,
                 r.rho_chart.parse("2*rho'^2 + 1/2*theta'^2 + 1 + z_E'^(2/3)")));

    // without an E parameter the term is appended with the requested sign
    LagrangianSystem bare = orbit1_system();
    auto [neg, lam2] = promote_energy(bare, orbit3_symmetry(), -1);
    CHECK(lam2 == Rational(2, 3));
    Expr zterm = pow_expr(make_symbol(neg.chart.jet("z_E", 1)), Rational(2, 3));
    CHECK(proved(neg.L, simplify(bare.L - zterm)));

    // only reparameterizing symmetries admit energy promotion
    CHECK_THROWS_AS(promote_energy(osc4_system(), osc4_symmetry()), std::invalid_argument);
}

TEST_CASE("coupling promotion and weight balance") {
    JetChart c;
    c.add_coordinate("r", 1);
    c.add_parameter("D");
    LagrangianSystem sys{c, c.parse("1/2*r'^2 + D/r^3"), std::nullopt};

    LagrangianSystem prom = promote_couplings(sys, {"D"});
    CHECK(prom.chart.has_coordinate("z_D"));
    CHECK(contains_symbol(prom.L, prom.chart.jet("z_D", 1)));
    CHECK_FALSE(contains_symbol(prom.L, c.parameter("D")));

    auto weights = solve_coupling_weights(prom, orbit3_symmetry());
    CHECK(weights.at("z_D") == Rational(7));

    ScalingSymmetry lifted = orbit3_symmetry();
    lifted.extra_weights["z_D"] = weights.at("z_D");
    CHECK(verify_scaling_symmetry(prom, lifted).verified);

    CHECK_THROWS(promote_couplings(sys, {"nope"}));

    // a coupling appearing with two incompatible weights has no solution
    JetChart c2;
    c2.add_coordinate("r", 1);
    c2.add_parameter("D");
    LagrangianSystem bad{c2, c2.parse("1/2*r'^2 + D/r^3 + D*r"), std::nullopt};
    CHECK_THROWS_AS(solve_coupling_weights(promote_couplings(bad, {"D"}), orbit3_symmetry()),
                    ReductionError);
}

TEST_CASE("weighted coordinates reduce alongside the scaled one") {
    JetChart c;
    c.add_coordinate("r", 1);
    c.add_coordinate("z_D", 1);
    LagrangianSystem sys{c, c.parse("1/2*r'^2 + z_D'/r^3"), std::nullopt};
    ScalingSymmetry sym = orbit3_symmetry();
    sym.extra_weights["z_D"] = 7;
    CHECK(verify_scaling_symmetry(sys, sym).verified);

    ReductionResult r = reparameterize_and_factor(sys, sym);
    CHECK(proved(r.f_rho, r.rho_chart.parse("2*rho'^2 + 7*rho'*z_D + z_D'")));
}
