#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "hocr/integrate.hpp"
#include "hocr/models.hpp"

using namespace hocr;

namespace {

bool proved(const Expr& a, const Expr& b) {
    return equivalent(a, b) == Equivalence::ProvedEqual;
}

Binding initial_binding(const ModelDescriptor& m) {
    Binding b = m.parameters;
    for (const auto& [name, value] : m.initial) b.set(name, value);
    return b;
}

}  // namespace

TEST_CASE("catalog: every built-in model constructs with verified references") {
    for (const std::string& name : builtin_model_names()) {
        CAPTURE(name);
        ModelDescriptor m = builtin_model(name);
        CHECK(m.name == name);
        CHECK_FALSE(m.references.empty());
        CHECK_FALSE(m.initial.empty());
    }
    CHECK_THROWS_AS(builtin_model("no-such-model"), ModelError);
}

TEST_CASE("fourth-order oscillator: free model data") {
    ModelDescriptor m = pais_uhlenbeck();
    CHECK(m.name == "pais-uhlenbeck");
    CHECK_FALSE(m.system.contact());
    REQUIRE(m.symmetry);
    CHECK(m.symmetry->B == 0);
    REQUIRE(m.reduction);
    CHECK_FALSE(m.reduction->reparameterized);
    CHECK(proved(m.references.at("momentum_p1_q"), m.system.chart.parse("-lam*q''")));
    // full and reduced artifacts are populated
    CHECK(m.full_hamiltonian);
    CHECK(m.rho_hamiltonian);
    CHECK(m.contact);

    CHECK_THROWS_AS(pais_uhlenbeck(0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(pais_uhlenbeck(-0.5), std::invalid_argument);
}

TEST_CASE("fourth-order oscillator: zero damping reduces the damped model to the free one") {
    ModelDescriptor damped = pais_uhlenbeck(0.1);
    ModelDescriptor free_model = pais_uhlenbeck(0.0);
    CHECK(damped.system.contact());
    REQUIRE(damped.system.z);

    std::map<Symbol, Expr> sub{{damped.system.chart.parameter("gam"), zero()},
                               {*damped.system.z, zero()}};
    CHECK(proved(simplify(substitute(damped.system.L, sub)), free_model.system.L));
    CHECK(proved(simplify(substitute(damped.references.at("energy"), sub)),
                 free_model.references.at("energy")));
    CHECK(proved(simplify(substitute(damped.references.at("hamiltonian"), sub)),
                 free_model.references.at("hamiltonian")));
    CHECK(proved(simplify(substitute(damped.references.at("momentum_p0_q"), sub)),
                 free_model.references.at("momentum_p0_q")));
    for (const std::string key :
         {"full_eom_q", "full_eom_q'", "full_eom_theta", "full_eom_p0_q", "full_eom_p1_q",
          "full_eom_p0_theta"})
        CHECK(proved(simplify(substitute(damped.references.at(key), sub)),
                     free_model.references.at(key)));
}

TEST_CASE("third-order orbit: radicand stays positive along the reduced flow") {
    ModelDescriptor m = modified_kepler();
    REQUIRE(m.contact);
    const ReductionResult& r = *m.reduction;

    // map the default rho-chart data to the contact chart
    Binding at = initial_binding(m);
    // chi^(a) = rho^(a+1), up to the top jet of the reduced chart
    Binding contact_at = m.parameters;
    for (int a = 0; a <= 4; ++a)
        contact_at.set(r.reduced_chart.jet("chi", a),
                       at.values.at(r.rho_chart.jet("rho", a + 1)));
    contact_at.set("theta", m.initial.at("theta"));
    contact_at.set("theta'", m.initial.at("theta'"));

    auto rows = reduced_equations_of_motion(*m.contact);
    std::vector<double> y0;
    for (const auto& [s, rhs] : rows) {
        (void)rhs;
        if (s == r.action()) {
            y0.push_back(evaluate(r.S_expr, contact_at));
        } else if (s.kind() == SymKind::Momentum) {
            y0.push_back(evaluate(m.contact->momenta.at({s.base(), s.order()}), contact_at));
        } else {
            y0.push_back(contact_at.values.at(s));
        }
    }
    OdeSystem ode = compile_first_order(rows, m.parameters);
    Trajectory tr = integrate_adaptive(ode, y0, 0.0, 1.0, 1e-10, 1e-12);

    // radicand = 1 / (pi1_chi)^2: finite, nonzero momentum keeps it positive
    std::vector<double> pi1 = tr.series("pi1_chi");
    for (double v : pi1) {
        CHECK(std::abs(v) > 1e-6);
        CHECK(std::abs(v) < 1e6);
    }
    // the initial radicand itself is comfortably positive
    CHECK(evaluate(m.references.at("radicand"), initial_binding(m)) > 0.1);
}

TEST_CASE("first-order orbit: promoted velocity conserves the energy constant") {
    ModelDescriptor m = kepler_with_energy(+1);
    REQUIRE(m.lambda_E);
    CHECK(*m.lambda_E == Rational(2, 3));
    CHECK_THROWS_AS(kepler_with_energy(0), std::invalid_argument);

    const ReductionResult& r = *m.reduction;
    LagrangianSystem lhat{
        r.rho_chart,
        simplify(call(Func::Exp, make_symbol(r.rho_chart.jet("rho", 0))) * r.f_rho),
        std::nullopt};
    std::vector<std::pair<std::string, Expr>> tops;
    for (const auto& [name, residual] : euler_lagrange(lhat)) {
        auto sol = solve_top_derivative(residual, lhat.chart, name);
        REQUIRE_MESSAGE(sol.has_value(), name);
        tops.emplace_back(name, *sol);
    }
    OdeSystem ode = compile_jet_system(lhat.chart, tops, m.parameters);
    std::vector<double> y0;
    for (Symbol s : ode.state) y0.push_back(m.initial.at(s.name()));
    Trajectory tr = integrate_adaptive(ode, y0, 0.0, 2.0, 1e-12, 1e-14);

    // dz/dt = z_E'(tau) e^{-3 rho} is the conserved energy combination
    std::vector<double> zp = tr.series("z_E'");
    std::vector<double> rho = tr.series("rho");
    double c0 = zp.front() * std::exp(-3.0 * rho.front());
    CHECK(c0 == doctest::Approx(std::pow(0.05, 1.5)).epsilon(1e-12));
    double drift = 0.0;
    for (size_t i = 0; i < zp.size(); ++i)
        drift = std::max(drift, std::abs(zp[i] * std::exp(-3.0 * rho[i]) - c0));
    CHECK(drift <= 1e-8);
}

TEST_CASE("first-order orbit: negative-sign variant builds") {
    ModelDescriptor m = kepler_with_energy(-1);
    CHECK(m.name == "kepler-energy-minus");
    CHECK(proved(m.references.at("reduced_core_rho"),
                 m.reduction->rho_chart.parse("2*rho'^2 + 1/2*theta'^2 + 1 - z_E'^(2/3)")));
}

TEST_CASE("cosmological model: structure, limits, and zero-energy data") {
    ModelDescriptor m = flrw_fr(default_flrw_potential());
    const JetChart& c = m.system.chart;

    // without the higher-order term and the scalar, only the first-order
    // kinetic piece survives
    std::map<Symbol, Expr> sub{{c.parameter("lam"), zero()}};
    for (int a = 0; a <= 4; ++a) sub[c.jet("phi", a)] = zero();
    CHECK(proved(simplify(substitute(m.system.L, sub)),
                 c.parse("-1/(24*piG)*v'^2/v")));

    // default data sits on the zero-energy surface
    Binding b = initial_binding(m);
    CHECK(std::abs(evaluate(energy_function(m.system), b)) < 1e-9);

    // a potential touching anything but the scalar is rejected
    Expr bad = mul({make_symbol(Symbol::intern("v", SymKind::Coordinate, "v", 0)),
                    default_flrw_potential()});
    CHECK_THROWS_AS(flrw_fr(bad), std::invalid_argument);
}

TEST_CASE("cosmological model with lapse: unit lapse and input validation") {
    ModelDescriptor m = flrw_general_lapse(default_flrw_lapse(), default_flrw_potential());
    CHECK(m.prescribed.size() == 5);
    CHECK(m.references.count("chi_equation_unit_lapse") == 1);
    CHECK(proved(m.references.at("herglotz_gauge_offset"),
                 m.reduction->reduced_chart.parse("-lam/(9*piG)*(3*chi^2*chi' + chi^4)")));

    Symbol t = Symbol::intern("t", SymKind::Time);
    // a lapse that dips nonpositive inside the default window is rejected
    CHECK_THROWS_AS(flrw_general_lapse(call(Func::Sin, make_symbol(t)),
                                       default_flrw_potential()),
                    std::invalid_argument);
    // the lapse may depend only on time
    CHECK_THROWS_AS(flrw_general_lapse(default_flrw_potential(), default_flrw_potential()),
                    std::invalid_argument);
}

namespace {

const char* kOscillatorFile = R"model(
# fourth-order oscillator written in the external format
[coordinates]
q: 2
theta: 1

[parameters]
lam = 0.1

[lagrangian]
1/2*q'^2 - 1/2*q^2*theta'^2
  - lam/2*q''^2

[symmetry]
coordinate = q
A = 1
B = 0
Lambda = 2

[initial]
q = 1.0
q' = 0.1
theta' = 1.0
)model";

}  // namespace

TEST_CASE("model files: a well-formed file round-trips against the catalog") {
    std::istringstream in(kOscillatorFile);
    ModelDescriptor m = load_model(in, "osc-file");
    CHECK(m.name == "osc-file");
    ModelDescriptor builtin = pais_uhlenbeck();
    CHECK(proved(m.system.L, builtin.system.L));
    REQUIRE(m.symmetry);
    CHECK(m.symmetry->coordinate == "q");
    CHECK(m.symmetry->A == 1);
    CHECK(m.symmetry->Lambda == 2);
    CHECK(m.parameters.values.at(m.system.chart.parameter("lam")) == doctest::Approx(0.1));
    CHECK(m.initial.at("q'") == doctest::Approx(0.1));

    // the declared symmetry verifies and reduces to the catalog core
    CHECK(verify_scaling_symmetry(m.system, *m.symmetry).verified);
    ReductionResult r = reparameterize_and_factor(m.system, *m.symmetry);
    CHECK(proved(r.f_rho, builtin.references.at("reduced_core_rho")));
}

TEST_CASE("model files: contact section and file loading") {
    const char* text = R"model(
[coordinates]
q: 2
theta: 1
[parameters]
lam = 0.1
gam = 0.1
[lagrangian]
1/2*q'^2 - 1/2*q^2*theta'^2 - lam/2*q''^2
[contact]
action = z
-gam*z
[initial]
q = 1.0
z = 0.0
)model";
    std::istringstream in(text);
    ModelDescriptor m = load_model(in);
    CHECK(m.system.contact());
    CHECK(proved(m.system.L, pais_uhlenbeck(0.1).system.L));
    CHECK_FALSE(m.symmetry);

    const std::string path = "test_models_tmp.model";
    {
        std::ofstream out(path);
        out << text;
    }
    ModelDescriptor from_file = load_model_file(path);
    CHECK(from_file.name == "test_models_tmp");
    CHECK(proved(from_file.system.L, m.system.L));
    CHECK_THROWS_AS(load_model_file("does-not-exist.model"), ModelError);
}

TEST_CASE("model files: malformed input is rejected with a line reference") {
    auto reject = [](const char* text) {
        std::istringstream in(text);
        CHECK_THROWS_AS(load_model(in), ModelError);
    };
    reject("");                                       // no sections at all
    reject("[coordinates]\nq: 2\n");                  // missing Lagrangian
    reject("q: 2\n");                                 // content before a section
    reject("[widgets]\n");                            // unknown section
    reject("[coordinates]\nq: banana\n[lagrangian]\nq\n");
    reject("[coordinates]\nq: 2\n[lagrangian]\nq +* q'\n");   // parse error
    reject("[coordinates]\nq: 1\n[lagrangian]\nq'\n[symmetry]\nA = 1\n");  // incomplete
    reject("[coordinates]\nq: 1\n[lagrangian]\nq'\n[symmetry]\n"
           "coordinate = nope\nA = 1\nLambda = 2\n");
    reject("[coordinates]\nq: 1\n[lagrangian]\nq'\n[symmetry]\n"
           "coordinate = q\nA = one\nLambda = 2\n");  // malformed rational
    reject("[coordinates]\nq: 1\n[lagrangian]\nq'\n[contact]\n-q\n");  // no action line
    reject("[coordinates]\nq: 1\n[lagrangian]\nq'\n[initial]\nwat = 1\n");

    // the error message carries the offending line number
    std::istringstream in("[coordinates]\nq: 2\n[lagrangian]\nq +* q'\n");
    try {
        load_model(in);
        FAIL("expected ModelError");
    } catch (const ModelError& e) {
        CHECK(std::string(e.what()).find("line 4") != std::string::npos);
    }
}
