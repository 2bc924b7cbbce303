#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hocr/integrate.hpp"
#include "hocr/mech.hpp"

using namespace hocr;

namespace {

JetChart harmonic_chart() {
    JetChart c;
    c.add_coordinate("q", 1);
    return c;
}

OdeSystem harmonic_system(const std::vector<std::pair<Symbol, Expr>>& aux = {}) {
    JetChart c = harmonic_chart();
    // q'' = -q
    return compile_jet_system(c, {{"q", -c.parse("q")}}, Binding{}, {}, aux);
}

}  // namespace

TEST_CASE("tape matches symbolic evaluation") {
    JetChart c;
    c.add_coordinate("x", 1);
    c.add_coordinate("y", 1);
    c.add_parameter("a");
    Expr f = c.parse("sin(x)*exp(-a*y) + log(1 + x^2) + y^(3/2) + x/y");
    Binding params;
    params.set("a", 0.7);
    std::vector<Symbol> states = {c.jet("x", 0), c.jet("y", 0)};
    Tape tape({f}, states, params, c.time());
    const double xs[] = {0.3, 1.1, 2.5};
    const double ys[] = {0.9, 0.2, 1.7};
    for (int i = 0; i < 3; ++i) {
        double yv[2] = {xs[i], ys[i]};
        double out;
        tape.eval(0.0, yv, &out);
        Binding b = params;
        b.set("x", xs[i]);
        b.set("y", ys[i]);
        CHECK(out == doctest::Approx(evaluate(f, b)).epsilon(1e-14));
    }
}

TEST_CASE("tape uses the time symbol") {
    JetChart c;
    c.add_coordinate("x", 1);
    Expr f = c.parse("x * cos(t)");
    Tape tape({f}, {c.jet("x", 0)}, Binding{}, c.time());
    double x = 2.0, out;
    tape.eval(0.5, &x, &out);
    CHECK(out == doctest::Approx(2.0 * std::cos(0.5)).epsilon(1e-15));
}

TEST_CASE("tape domain errors name the offending subexpression") {
    JetChart c;
    c.add_coordinate("x", 1);
    Tape tape({sqrt_expr(c.parse("x - 2"))}, {c.jet("x", 0)}, Binding{}, c.time());
    double x = 1.0, out;
    CHECK_THROWS_WITH_AS(tape.eval(0.0, &x, &out),
                         doctest::Contains("-2 + x"), DomainError);
}

TEST_CASE("compiling an unbound symbol fails") {
    JetChart c;
    c.add_coordinate("x", 1);
    c.add_parameter("b");
    CHECK_THROWS_AS(
        compile_first_order({{c.jet("x", 0), c.parse("b*x")}}, Binding{}),
        UnboundSymbolError);
}

TEST_CASE("jet system layout and chain rule") {
    JetChart c;
    c.add_coordinate("q", 2);
    c.add_parameter("lam");
    Binding params;
    params.set("lam", 0.1);
    Expr top = c.parse("-(q + q'')/lam");  // q'''' for L = (q'^2 - q^2 - lam*q''^2)/2
    Symbol zt = Symbol::intern("tphys", SymKind::Auxiliary);
    OdeSystem sys = compile_jet_system(c, {{"q", top}}, params,
                                       {{zt, make_int(1)}});
    REQUIRE(sys.state.size() == 5);
    CHECK(sys.state[0].name() == "q");
    CHECK(sys.state[3].name() == "q'''");
    CHECK(sys.state[4].name() == "tphys");
    CHECK(sys.index_of(c.jet("q", 2)) == 2);
    double y[5] = {1.0, 2.0, 3.0, 4.0, 0.0};
    double dy[5];
    sys.rhs_eval(0.0, y, dy);
    CHECK(dy[0] == 2.0);
    CHECK(dy[1] == 3.0);
    CHECK(dy[2] == 4.0);
    CHECK(dy[3] == doctest::Approx(-(1.0 + 3.0) / 0.1));
    CHECK(dy[4] == 1.0);
}

TEST_CASE("rk4 harmonic oscillator over one period") {
    OdeSystem sys = harmonic_system();
    Trajectory tr = integrate_fixed(sys, {1.0, 0.0}, 0.0, 2.0 * M_PI, 1e-3);
    CHECK(tr.columns == std::vector<std::string>{"q", "q'"});
    CHECK(tr.times.front() == 0.0);
    CHECK(tr.times.back() == doctest::Approx(2.0 * M_PI).epsilon(1e-12));
    CHECK(std::abs(tr.rows.back()[0] - 1.0) < 1e-9);
    CHECK(std::abs(tr.rows.back()[1]) < 1e-9);
}

TEST_CASE("rk4 has fourth-order convergence") {
    OdeSystem sys = harmonic_system();
    auto err_at = [&](double dt) {
        Trajectory tr = integrate_fixed(sys, {1.0, 0.0}, 0.0, 1.0, dt);
        return std::abs(tr.rows.back()[0] - std::cos(1.0));
    };
    double e1 = err_at(0.05), e2 = err_at(0.025);
    double order = std::log2(e1 / e2);
    CHECK(order > 3.7);
    CHECK(order < 4.3);
}

TEST_CASE("degenerate spans") {
    OdeSystem sys = harmonic_system();
    Trajectory fixed = integrate_fixed(sys, {1.0, 0.0}, 2.0, 2.0, 0.1);
    CHECK(fixed.rows.size() == 1);
    CHECK(fixed.rows[0][0] == 1.0);
    Trajectory ad = integrate_adaptive(sys, {1.0, 0.0}, 2.0, 2.0, 1e-8, 1e-10);
    CHECK(ad.rows.size() == 1);
}

TEST_CASE("adaptive harmonic oscillator meets tolerance") {
    OdeSystem sys = harmonic_system();
    Trajectory tr = integrate_adaptive(sys, {1.0, 0.0}, 0.0, 2.0 * M_PI, 1e-10, 1e-12);
    CHECK(std::abs(tr.rows.back()[0] - 1.0) < 1e-8);
    CHECK(std::abs(tr.rows.back()[1]) < 1e-8);
}

TEST_CASE("adaptive dense output at requested samples") {
    OdeSystem sys = harmonic_system();
    std::vector<double> samples;
    for (int i = 0; i <= 40; ++i) samples.push_back(0.157 * i);
    Trajectory tr = integrate_adaptive(sys, {1.0, 0.0}, 0.0, 6.3, 1e-10, 1e-12, &samples);
    // the t = 0 sample coincides with the initial row
    REQUIRE(tr.times.size() == samples.size());
    for (size_t i = 0; i < tr.times.size(); ++i) {
        CHECK(std::abs(tr.rows[i][0] - std::cos(tr.times[i])) < 1e-6);
        CHECK(std::abs(tr.rows[i][1] + std::sin(tr.times[i])) < 1e-6);
    }
}

TEST_CASE("adaptive integration is deterministic") {
    OdeSystem sys = harmonic_system();
    Trajectory a = integrate_adaptive(sys, {1.0, 0.0}, 0.0, 5.0, 1e-9, 1e-11);
    Trajectory b = integrate_adaptive(sys, {1.0, 0.0}, 0.0, 5.0, 1e-9, 1e-11);
    REQUIRE(a.times == b.times);
    CHECK(a.rows == b.rows);
}

TEST_CASE("fourth-order oscillator conserves its energy readout") {
    JetChart c;
    c.add_coordinate("q", 2);
    c.add_parameter("lam");
    LagrangianSystem lag{c, c.parse("1/2*q'^2 - 1/2*q^2 - lam/2*q''^2"), std::nullopt};
    auto residuals = euler_lagrange(lag);
    REQUIRE(residuals.size() == 1);
    auto top = solve_top_derivative(residuals[0].second, c, "q");
    REQUIRE(top.has_value());
    Binding params;
    params.set("lam", 0.1);
    Symbol esym = Symbol::intern("E", SymKind::Auxiliary);
    OdeSystem sys = compile_jet_system(c, {{"q", *top}}, params, {},
                                       {{esym, energy_function(lag)}});
    Trajectory tr = integrate_adaptive(sys, {1.0, 0.1, 0.0, 0.0}, 0.0, 10.0, 1e-10, 1e-12);
    auto e = tr.series("E");
    double drift = 0;
    for (double v : e) drift = std::max(drift, std::abs(v - e.front()));
    CHECK(drift < 1e-8);
}

TEST_CASE("finite-time domain failure raises IntegrationError") {
    JetChart c;
    c.add_coordinate("w", 1);
    // w' = -1/(2 sqrt(w)) reaches w = 0 at t = 1 from w(0) = 1
    Expr rhs = c.parse("-1/2 * w^(-1/2)");
    OdeSystem sys = compile_first_order({{c.jet("w", 0), rhs}}, Binding{});
    CHECK_THROWS_AS(integrate_fixed(sys, {1.0}, 0.0, 2.0, 1e-3), IntegrationError);
    CHECK_THROWS_AS(integrate_adaptive(sys, {1.0}, 0.0, 2.0, 1e-8, 1e-10), IntegrationError);
}

TEST_CASE("time reconstruction") {
    Trajectory tr;
    tr.columns = {"rho"};
    tr.parameterization = "reparameterized";
    const double rho0 = 0.4;
    for (int i = 0; i <= 100; ++i) {
        tr.times.push_back(0.01 * i);
        tr.rows.push_back({rho0});
    }
    SUBCASE("Lambda = 1 leaves time unchanged") {
        Trajectory out = reconstruct_time(tr, Rational(1));
        auto tp = out.series("t_phys");
        CHECK(tp.front() == 0.0);
        CHECK(tp.back() == doctest::Approx(tr.times.back()).epsilon(1e-14));
    }
    SUBCASE("constant rho rescales time by exp((1-Lambda) rho)") {
        Trajectory out = reconstruct_time(tr, Rational(3));
        auto tp = out.series("t_phys");
        CHECK(tp.back() == doctest::Approx(std::exp(-2.0 * rho0) * tr.times.back())
                               .epsilon(1e-12));
    }
    SUBCASE("missing rho column throws") {
        CHECK_THROWS_AS(reconstruct_time(tr, Rational(1), "nope"), std::invalid_argument);
    }
}
