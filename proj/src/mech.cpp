#include "hocr/mech.hpp"

#include <cmath>
#include <stdexcept>

namespace hocr {

Expr d_T(const Expr& f, const JetChart& chart) {
    std::vector<Expr> terms;
    for (Symbol s : free_symbols(f)) {
        if (s.kind() != SymKind::Coordinate && s.kind() != SymKind::Jet) continue;
        if (!chart.has_coordinate(s.base())) continue;
        int bound = chart.max_jet_order(s.base());
        if (s.order() + 1 > bound)
            throw std::domain_error("d_T order overflow: '" + s.name() +
                                    "' is already the top jet of '" + s.base() + "'");
        Expr df = differentiate(f, s);
        if (is_zero(df)) continue;
        terms.push_back(make_symbol(chart.jet(s.base(), s.order() + 1)) * df);
    }
    return add(std::move(terms));
}

Expr D_L(const Expr& f, const Expr& L, const JetChart& chart, Symbol z) {
    Expr dt = d_T(f, chart);
    Expr dfdz = differentiate(f, z);
    Expr dLdz = differentiate(L, z);
    return dt + L * dfdz - f * dLdz;
}

namespace {

Expr total_derivative(const LagrangianSystem& sys, const Expr& f, const std::string& coord) {
    if (sys.contact() && !sys.dT_momenta.count(coord)) return D_L(f, sys.L, sys.chart, *sys.z);
    return d_T(f, sys.chart);
}

}  // namespace

MomentaSet jacobi_ostrogradsky_momenta(const LagrangianSystem& sys) {
    MomentaSet out;
    for (const auto& c : sys.chart.variational_coordinates()) {
        int k = c.order;
        for (int r = 1; r <= k; ++r) {
            std::vector<Expr> terms;
            for (int alpha = 0; alpha <= k - r; ++alpha) {
                Expr d = differentiate(sys.L, sys.chart.jet(c.name, r + alpha));
                for (int j = 0; j < alpha; ++j) d = total_derivative(sys, d, c.name);
                terms.push_back(alpha % 2 == 0 ? d : -d);
            }
            out[{c.name, r - 1}] = add(std::move(terms));
        }
    }
    return out;
}

Expr energy_function(const LagrangianSystem& sys) {
    MomentaSet momenta = jacobi_ostrogradsky_momenta(sys);
    std::vector<Expr> terms;
    for (const auto& c : sys.chart.variational_coordinates())
        for (int alpha = 0; alpha < c.order; ++alpha)
            terms.push_back(momenta.at({c.name, alpha}) *
                            make_symbol(sys.chart.jet(c.name, alpha + 1)));
    terms.push_back(-sys.L);
    return add(std::move(terms));
}

namespace {

std::vector<std::pair<std::string, Expr>> variational_residuals(const LagrangianSystem& sys,
                                                                bool contact) {
    std::vector<std::pair<std::string, Expr>> out;
    for (const auto& c : sys.chart.variational_coordinates()) {
        std::vector<Expr> terms;
        for (int alpha = 0; alpha <= c.order; ++alpha) {
            Expr d = differentiate(sys.L, sys.chart.jet(c.name, alpha));
            for (int j = 0; j < alpha; ++j)
                d = contact ? D_L(d, sys.L, sys.chart, *sys.z) : d_T(d, sys.chart);
            terms.push_back(alpha % 2 == 0 ? d : -d);
        }
        out.emplace_back(c.name, add(std::move(terms)));
    }
    return out;
}

}  // namespace

std::vector<std::pair<std::string, Expr>> euler_lagrange(const LagrangianSystem& sys) {
    return variational_residuals(sys, false);
}

std::vector<std::pair<std::string, Expr>> herglotz_equations(const LagrangianSystem& sys) {
    if (!sys.contact())
        throw std::invalid_argument("herglotz_equations requires a contact system");
    return variational_residuals(sys, true);
}

std::optional<Expr> solve_top_derivative(const Expr& residual, const JetChart& chart,
                                         const std::string& coord) {
    Symbol top = chart.jet(coord, 2 * chart.order_of(coord));
    Expr u = make_symbol(top);
    Expr a = differentiate(residual, top);
    if (is_zero(a) || contains_symbol(a, top)) return std::nullopt;
    Expr rest = simplify(residual - a * u);
    if (contains_symbol(rest, top)) return std::nullopt;
    Expr solved = -rest / a;
    for (const auto& c : chart.variational_coordinates()) {
        if (c.name == coord) continue;
        if (contains_symbol(solved, chart.jet(c.name, 2 * c.order))) return std::nullopt;
    }
    return solved;
}

namespace {

Expr det_expr(const std::vector<std::vector<Expr>>& m) {
    size_t n = m.size();
    if (n == 1) return m[0][0];
    std::vector<Expr> terms;
    for (size_t j = 0; j < n; ++j) {
        std::vector<std::vector<Expr>> minor;
        for (size_t r = 1; r < n; ++r) {
            std::vector<Expr> row;
            for (size_t c = 0; c < n; ++c)
                if (c != j) row.push_back(m[r][c]);
            minor.push_back(std::move(row));
        }
        Expr t = m[0][j] * det_expr(minor);
        terms.push_back(j % 2 == 0 ? t : -t);
    }
    return add(std::move(terms));
}

}  // namespace

Expr hessian_determinant(const LagrangianSystem& sys) {
    auto coords = sys.chart.variational_coordinates();
    std::vector<std::vector<Expr>> m;
    for (const auto& ci : coords) {
        std::vector<Expr> row;
        Expr di = differentiate(sys.L, sys.chart.jet(ci.name, ci.order));
        for (const auto& cj : coords)
            row.push_back(differentiate(di, sys.chart.jet(cj.name, cj.order)));
        m.push_back(std::move(row));
    }
    return det_expr(m);
}

Regularity regularity_check(const LagrangianSystem& sys, const Binding& at) {
    Expr det = hessian_determinant(sys);
    if (is_zero(det)) return Regularity::Singular;
    double v = evaluate(det, at);
    return std::abs(v) > 1e-12 ? Regularity::Regular : Regularity::Singular;
}

Symbol HamiltonianSystem::momentum(const std::string& base, int level) const {
    for (const auto& pr : pairs) {
        Symbol p = pr.p;
        if (p.base() == base && p.order() == level) return p;
    }
    throw std::invalid_argument("no momentum for (" + base + ", " + std::to_string(level) + ")");
}

Expr invert_monotone_relation(const Expr& g, Symbol u, const Expr& p) {
    Expr uexpr = make_symbol(u);
    Expr a = differentiate(g, u);
    if (is_zero(a)) throw std::domain_error("relation does not involve '" + u.name() + "'");
    if (!contains_symbol(a, u)) {
        // linear: p = a u + b
        Expr b = simplify(g - a * uexpr);
        if (contains_symbol(b, u))
            throw std::domain_error("relation for '" + u.name() +
                                    "' is not invertible in the supported classes");
        return simplify((p - b) / a);
    }
    // shifted power: p = c0 * v^m with v = u + shift
    Expr r = simplify(g / a);
    Expr drdu = differentiate(r, u);
    auto minv = as_rational(drdu);
    if (!minv || *minv == 0)
        throw std::domain_error("relation for '" + u.name() +
                                "' is not invertible in the supported classes");
    Rational m = Rational(1) / *minv;
    Expr v = make_rational(m) * r;
    Expr shift = simplify(v - uexpr);
    Expr c0 = simplify(g * pow_expr(v, -m));
    if (contains_symbol(shift, u) || contains_symbol(c0, u))
        throw std::domain_error("relation for '" + u.name() +
                                "' is not invertible in the supported classes");
    return simplify(pow_expr(p / c0, Rational(1) / m) - shift);
}

HamiltonianSystem legendre_ostrogradsky(const LagrangianSystem& sys,
                                        const std::string& prefix) {
    HamiltonianSystem h;
    h.chart = sys.chart;
    h.z = sys.z;
    h.momenta = jacobi_ostrogradsky_momenta(sys);

    auto coords = sys.chart.variational_coordinates();
    // momentum symbols and canonical pairs
    std::map<std::pair<std::string, int>, Symbol> psym;
    for (const auto& c : coords) {
        for (int alpha = 0; alpha < c.order; ++alpha) {
            std::string name = prefix + std::to_string(alpha) + "_" + c.name;
            Symbol p = Symbol::intern(name, SymKind::Momentum, c.name, alpha);
            psym[{c.name, alpha}] = p;
            h.chart.add_symbol(p);
            h.pairs.push_back(PhasePair{sys.chart.jet(c.name, alpha), p});
        }
    }

    // invert p^{k-1} = dL/dq_k per coordinate
    std::map<Symbol, Expr> inv;
    for (const auto& c : coords) {
        int k = c.order;
        if (k == 0) continue;  // algebraic coordinate: no momentum to invert
        Symbol top = sys.chart.jet(c.name, k);
        Expr g = differentiate(sys.L, top);
        for (const auto& other : coords)
            if (other.name != c.name && contains_symbol(g, sys.chart.jet(other.name, other.order)))
                throw std::domain_error("cross-coupled top-derivative Hessian between '" +
                                        c.name + "' and '" + other.name + "'");
        Expr p = make_symbol(psym.at({c.name, k - 1}));
        try {
            inv[top] = invert_monotone_relation(g, top, p);
        } catch (const std::domain_error& e) {
            throw std::domain_error("momentum relation for '" + c.name + "': " + e.what());
        }
    }
    h.top_inverse = inv;

    std::vector<Expr> terms;
    for (const auto& c : coords)
        for (int alpha = 0; alpha < c.order; ++alpha)
            terms.push_back(make_symbol(psym.at({c.name, alpha})) *
                            make_symbol(sys.chart.jet(c.name, alpha + 1)));
    terms.push_back(-sys.L);
    h.H = simplify(substitute(add(std::move(terms)), inv));
    return h;
}

std::vector<std::pair<Symbol, Expr>> hamilton_equations(const HamiltonianSystem& h) {
    std::vector<std::pair<Symbol, Expr>> out;
    for (const auto& pr : h.pairs) {
        out.emplace_back(pr.q, differentiate(h.H, pr.p));
        out.emplace_back(pr.p, -differentiate(h.H, pr.q));
    }
    return out;
}

std::vector<std::pair<Symbol, Expr>> contact_hamilton_equations(const HamiltonianSystem& h) {
    if (!h.contact())
        throw std::invalid_argument("contact_hamilton_equations requires an action symbol");
    Expr dHdz = differentiate(h.H, *h.z);
    std::vector<std::pair<Symbol, Expr>> out;
    std::vector<Expr> zdot;
    for (const auto& pr : h.pairs) {
        Expr dHdp = differentiate(h.H, pr.p);
        out.emplace_back(pr.q, dHdp);
        out.emplace_back(pr.p, -(differentiate(h.H, pr.q) + make_symbol(pr.p) * dHdz));
        zdot.push_back(make_symbol(pr.p) * dHdp);
    }
    zdot.push_back(-h.H);
    out.emplace_back(*h.z, add(std::move(zdot)));
    return out;
}

}  // namespace hocr
