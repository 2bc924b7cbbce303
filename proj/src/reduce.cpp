#include "hocr/reduce.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace hocr {

namespace {

Expr exp_e(const Expr& x) { return call(Func::Exp, x); }

void check_symmetry_invariants(const ScalingSymmetry& sym) {
    if (sym.A == 0) throw std::invalid_argument("scaling symmetry requires A != 0");
    if (sym.B != 0 && sym.B + sym.Lambda != 1)
        throw std::invalid_argument("reparameterizing symmetry requires B + Lambda = 1");
}

Rational base_weight(const ScalingSymmetry& sym, const std::string& coord) {
    if (coord == sym.coordinate) return sym.A;
    auto it = sym.extra_weights.find(coord);
    return it == sym.extra_weights.end() ? Rational(0) : it->second;
}

}  // namespace

std::map<Symbol, Rational> lift_symmetry(const ScalingSymmetry& sym, const JetChart& chart) {
    check_symmetry_invariants(sym);
    std::map<Symbol, Rational> weights;
    for (const auto& c : chart.coordinates()) {
        Rational w0 = base_weight(sym, c.name);
        for (int alpha = 0; alpha < 2 * c.order; ++alpha)
            weights[chart.jet(c.name, alpha)] = w0 - alpha * sym.B;
    }
    return weights;
}

SymmetryReport verify_scaling_symmetry(const LagrangianSystem& sys, const ScalingSymmetry& sym) {
    check_symmetry_invariants(sym);
    Symbol kappa = Symbol::intern("kappa", SymKind::Parameter);
    Expr kap = make_symbol(kappa);
    std::map<Symbol, Expr> rules;
    for (const auto& [s, w] : lift_symmetry(sym, sys.chart))
        if (w != 0) rules[s] = pow_expr(kap, w) * make_symbol(s);
    Expr transformed = simplify(substitute(sys.L, rules));
    Expr target = simplify(pow_expr(kap, sym.Lambda) * sys.L);
    Equivalence ev = equivalent(transformed, target);
    SymmetryReport rep{ev == Equivalence::ProvedEqual || ev == Equivalence::NumericallyEqual,
                       ev, Binding{}};
    if (!rep.verified) {
        // hunt for a numeric witness of the discrepancy
        Expr diff = simplify(transformed - target);
        std::mt19937 rng(8401);
        std::uniform_real_distribution<double> dist(0.5, 1.5);
        auto syms = free_symbols(diff);
        for (int attempt = 0; attempt < 200; ++attempt) {
            Binding b;
            for (Symbol s : syms) b.set(s, dist(rng));
            try {
                if (std::abs(evaluate(diff, b)) > 1e-6) {
                    rep.witness = b;
                    break;
                }
            } catch (const DomainError&) {
            }
        }
    }
    return rep;
}

ReductionResult reparameterize_and_factor(const LagrangianSystem& sys,
                                          const ScalingSymmetry& sym) {
    check_symmetry_invariants(sym);
    ReductionResult r;
    r.sym = sym;
    r.k = sys.chart.order_of(sym.coordinate);
    r.reparameterized = sym.reparameterizing();
    r.repar_exponent = r.reparameterized ? sym.Lambda - 1 : Rational(0);

    r.rho_chart.add_coordinate("rho", r.k);
    for (const auto& c : sys.chart.coordinates())
        if (c.name != sym.coordinate) r.rho_chart.add_coordinate(c.name, c.order, c.prescribed);
    for (Symbol p : sys.chart.parameters()) r.rho_chart.add_parameter(p.name());

    Expr rho = make_symbol(r.rho_chart.jet("rho", 0));
    // d/dt = e^{-B rho} d/dtau (B != 0); tau = t when B = 0
    Expr fac = r.reparameterized ? exp_e(-make_rational(sym.B) * rho) : one();
    Rational cq = r.reparameterized ? sym.A : sym.A / sym.Lambda;  // Q = e^{cq rho}

    for (const auto& c : sys.chart.coordinates()) {
        bool scaled = c.name == sym.coordinate;
        Rational w = base_weight(sym, c.name);
        if (!scaled && w == 0 && !r.reparameterized) continue;  // identity map
        // coordinate of weight w splits off e^{cw rho}; the residue keeps its name
        Rational cw = r.reparameterized ? w : w / sym.Lambda;
        Expr rep = scaled ? exp_e(make_rational(cw) * rho)
                          : make_symbol(r.rho_chart.jet(c.name, 0));
        if (!scaled && w != 0) rep = exp_e(make_rational(cw) * rho) * rep;
        r.inverse_map[sys.chart.jet(c.name, 0)] = simplify(rep);
        for (int alpha = 0; alpha < c.order; ++alpha) {
            rep = simplify(fac * d_T(rep, r.rho_chart));
            r.inverse_map[sys.chart.jet(c.name, alpha + 1)] = rep;
        }
    }

    Expr lhat = substitute(sys.L, r.inverse_map);
    if (r.reparameterized) lhat = exp_e(make_rational(sym.B) * rho) * lhat;  // Lhat = L dt/dtau
    r.f_rho = simplify(exp_e(-rho) * lhat);
    if (contains_symbol(r.f_rho, r.rho_chart.jet("rho", 0)))
        throw ReductionError("reduced core still depends on rho: '" + to_string(r.f_rho) +
                             "' (wrongly declared symmetry?)");

    // forward map: rho-chart jets as expressions over the full chart
    Expr Q = make_symbol(sys.chart.jet(sym.coordinate, 0));
    Expr gfac = r.reparameterized ? pow_expr(Q, sym.B / sym.A) : one();  // e^{B rho}
    Expr rrep = make_rational(Rational(1) / cq) * call(Func::Log, Q);
    r.forward_map[r.rho_chart.jet("rho", 0)] = simplify(rrep);
    for (int alpha = 0; alpha < 2 * r.k; ++alpha) {
        rrep = simplify(gfac * d_T(rrep, sys.chart));
        r.forward_map[r.rho_chart.jet("rho", alpha + 1)] = rrep;
    }
    for (const auto& c : sys.chart.coordinates()) {
        if (c.name == sym.coordinate) continue;
        Rational w = base_weight(sym, c.name);
        if (w == 0 && !r.reparameterized) continue;  // identity map
        // residue of a weighted coordinate: q * Q^{-w/A} (reduces to q at w = 0)
        Expr rep = make_symbol(sys.chart.jet(c.name, 0)) * pow_expr(Q, -w / sym.A);
        if (w != 0) r.forward_map[r.rho_chart.jet(c.name, 0)] = simplify(rep);
        for (int alpha = 0; alpha < 2 * c.order; ++alpha) {
            try {
                rep = simplify(gfac * d_T(rep, sys.chart));
            } catch (const std::domain_error&) {
                break;  // ran out of jets on the full chart
            }
            r.forward_map[r.rho_chart.jet(c.name, alpha + 1)] = rep;
        }
    }
    return r;
}

Expr generalized_action(const Expr& f_rho, const JetChart& rho_chart) {
    int k = rho_chart.order_of("rho");
    Expr rho1 = make_symbol(rho_chart.jet("rho", 1));
    std::vector<Expr> terms;
    for (int a = 0; a < k; ++a) {
        Expr g = differentiate(f_rho, rho_chart.jet("rho", a + 1));
        for (int j = 0; j < a; ++j) g = simplify(rho1 * g + d_T(g, rho_chart));
        terms.push_back(a % 2 == 0 ? g : -g);
    }
    return simplify(add(std::move(terms)));
}

ReductionResult build_herglotz_lagrangian(ReductionResult r) {
    r.S_rho = generalized_action(r.f_rho, r.rho_chart);

    r.reduced_chart.add_coordinate("chi", r.k - 1);
    for (const auto& c : r.rho_chart.coordinates())
        if (c.name != "rho") r.reduced_chart.add_coordinate(c.name, c.order, c.prescribed);
    for (Symbol p : r.rho_chart.parameters()) r.reduced_chart.add_parameter(p.name());
    r.reduced_chart.set_action("S");

    std::map<Symbol, Expr> to_chi;
    for (int alpha = 1; alpha < 2 * r.k; ++alpha)
        to_chi[r.rho_chart.jet("rho", alpha)] = make_symbol(r.reduced_chart.jet("chi", alpha - 1));
    r.f = simplify(substitute(r.f_rho, to_chi));
    r.S_expr = simplify(substitute(r.S_rho, to_chi));
    r.herglotz_L = simplify(r.f - make_symbol(r.chi(0)) * make_symbol(r.action()));
    return r;
}

HamiltonianSystem hamiltonian_reduction(const HamiltonianSystem& full, ReductionResult& r) {
    if (r.k == 0 || !r.reduced_chart.has_coordinate("chi"))
        throw std::invalid_argument("hamiltonian_reduction needs a completed Lagrangian-side result");
    Symbol rho0 = r.rho_chart.jet("rho", 0);
    Expr erho = exp_e(make_symbol(rho0));
    Symbol S = r.action();

    HamiltonianSystem out;
    out.chart = r.reduced_chart;
    out.z = S;

    std::map<Symbol, Expr> rules;
    for (int alpha = 1; alpha < 2 * r.k; ++alpha)
        rules[r.rho_chart.jet("rho", alpha)] = make_symbol(r.reduced_chart.jet("chi", alpha - 1));

    auto reduced_momentum = [&](const std::string& base, int level) {
        Symbol pi = Symbol::intern("pi" + std::to_string(level) + "_" + base,
                                   SymKind::Momentum, base, level);
        out.chart.add_symbol(pi);
        return pi;
    };
    for (const auto& pr : full.pairs) {
        Symbol p = pr.p;
        if (p.base() == "rho") {
            if (p.order() == 0) {
                rules[p] = erho * make_symbol(S);
            } else {
                Symbol pi = reduced_momentum("chi", p.order() - 1);
                rules[p] = erho * make_symbol(pi);
                out.pairs.push_back({r.reduced_chart.jet("chi", p.order() - 1), pi});
            }
        } else {
            Symbol pi = reduced_momentum(p.base(), p.order());
            rules[p] = erho * make_symbol(pi);
            out.pairs.push_back({r.reduced_chart.jet(p.base(), p.order()), pi});
        }
    }

    auto reduce_expr = [&](const Expr& e, const std::string& what) {
        Expr red = simplify(exp_e(-make_symbol(rho0)) * substitute(e, rules));
        if (contains_symbol(red, rho0))
            throw ReductionError(what + " does not come out rho-free: '" + to_string(red) + "'");
        return red;
    };
    out.H = reduce_expr(full.H, "contact Hamiltonian");
    r.contact_H = out.H;

    // Legendre data in reduced variables: pi expressions over chi jets, and
    // the S expression, all rho-free by construction
    for (const auto& [key, expr] : full.momenta) {
        if (key.first == "rho") {
            if (key.second == 0)
                out.momenta[{"S", 0}] = reduce_expr(expr, "action expression");
            else
                out.momenta[{"chi", key.second - 1}] = reduce_expr(expr, "chi momentum");
        } else {
            out.momenta[{key.first, key.second}] = reduce_expr(expr, "momentum");
        }
    }
    for (const auto& [top, expr] : full.top_inverse) {
        Expr inv = simplify(substitute(expr, rules));
        if (top.base() == "rho")
            out.top_inverse[r.reduced_chart.jet("chi", top.order() - 1)] = inv;
        else
            out.top_inverse[top] = inv;
    }
    return out;
}

HamiltonianSystem herglotz_contact_hamiltonian(const ReductionResult& r,
                                               const std::string& prefix) {
    std::set<std::string> unscaled;
    for (const auto& c : r.reduced_chart.coordinates())
        if (c.name != "chi") unscaled.insert(c.name);

    if (r.k > 1) {
        LagrangianSystem lag{r.reduced_chart, r.herglotz_L, r.action(), unscaled};
        return legendre_ostrogradsky(lag, prefix);
    }

    // k = 1: chi is algebraic; eliminate it through the constraint S = df/dchi
    JetChart chart;
    chart.add_coordinate("chi", 0, /*prescribed=*/true);
    for (const auto& c : r.reduced_chart.coordinates())
        if (c.name != "chi") chart.add_coordinate(c.name, c.order, c.prescribed);
    for (Symbol p : r.reduced_chart.parameters()) chart.add_parameter(p.name());
    chart.set_action("S");
    LagrangianSystem lag{chart, r.herglotz_L, r.action(), unscaled};
    HamiltonianSystem h = legendre_ostrogradsky(lag, prefix);
    Symbol chi = r.chi(0);
    Expr chi_sol = invert_monotone_relation(differentiate(r.f, chi), chi,
                                            make_symbol(r.action()));
    h.H = simplify(substitute(h.H, {{chi, chi_sol}}));
    h.top_inverse[chi] = chi_sol;
    return h;
}

std::vector<std::pair<Symbol, Expr>> reduced_equations_of_motion(const HamiltonianSystem& contact) {
    return contact_hamilton_equations(contact);
}

LagrangianSystem promote_couplings(const LagrangianSystem& sys,
                                   const std::vector<std::string>& params) {
    LagrangianSystem out;
    out.z = sys.z;
    out.dT_momenta = sys.dT_momenta;
    for (const auto& c : sys.chart.coordinates())
        out.chart.add_coordinate(c.name, c.order, c.prescribed);
    std::map<Symbol, Expr> rules;
    for (const auto& name : params) {
        Symbol c = sys.chart.parameter(name);
        if (!contains_symbol(sys.L, c))
            throw std::invalid_argument("parameter '" + name + "' does not appear in L");
        out.chart.add_coordinate("z_" + name, 1);
        rules[c] = make_symbol(out.chart.jet("z_" + name, 1));
    }
    for (Symbol p : sys.chart.parameters()) {
        bool promoted = std::find(params.begin(), params.end(), p.name()) != params.end();
        if (!promoted) out.chart.add_parameter(p.name());
    }
    if (sys.chart.action()) out.chart.set_action(sys.chart.action()->name());
    out.L = simplify(substitute(sys.L, rules));
    return out;
}

namespace {

// affine weight form: constant + sum coeff_j * w_j over promoted couplings
struct Aff {
    Rational c = 0;
    std::map<std::string, Rational> coeff;
    Aff& operator+=(const Aff& o) {
        c += o.c;
        for (const auto& [k, v] : o.coeff) coeff[k] += v;
        return *this;
    }
    Aff& operator*=(const Rational& s) {
        c *= s;
        for (auto& [k, v] : coeff) v *= s;
        return *this;
    }
    bool operator==(const Aff& o) const {
        if (c != o.c) return false;
        auto nonzero = [](const std::map<std::string, Rational>& m) {
            std::map<std::string, Rational> out;
            for (const auto& [k, v] : m)
                if (v != 0) out[k] = v;
            return out;
        };
        return nonzero(coeff) == nonzero(o.coeff);
    }
};

Aff term_weight(const Expr& e, const std::map<Symbol, Rational>& known,
                const std::map<Symbol, std::pair<std::string, Rational>>& unknown) {
    switch (e->kind) {
        case NodeKind::Rational:
        case NodeKind::Float:
            return {};
        case NodeKind::Sym: {
            if (auto it = known.find(e->sym); it != known.end()) return {it->second, {}};
            if (auto it = unknown.find(e->sym); it != unknown.end()) {
                Aff a{it->second.second, {}};
                a.coeff[it->second.first] = 1;
                return a;
            }
            return {};  // parameters and loose symbols are weightless
        }
        case NodeKind::Pow: {
            Aff a = term_weight(e->base(), known, unknown);
            a *= e->rat;
            return a;
        }
        case NodeKind::Prod: {
            Aff a;
            for (const auto& f : e->args) a += term_weight(f, known, unknown);
            return a;
        }
        case NodeKind::Sum: {
            Aff first = term_weight(e->args[0], known, unknown);
            for (size_t i = 1; i < e->args.size(); ++i)
                if (!(term_weight(e->args[i], known, unknown) == first))
                    throw ReductionError("mixed-weight sum in weight balance: '" +
                                         to_string(e) + "'");
            return first;
        }
        case NodeKind::Call: {
            Aff a = term_weight(e->arg(), known, unknown);
            if (!(a == Aff{}))
                throw ReductionError("transcendental of weighted argument in weight balance");
            return {};
        }
    }
    return {};
}

}  // namespace

std::map<std::string, Rational> solve_coupling_weights(const LagrangianSystem& promoted,
                                                       const ScalingSymmetry& sym) {
    std::map<Symbol, Rational> known = lift_symmetry(sym, promoted.chart);
    // promoted velocities zdot_j carry unknown base weight w_j minus B
    std::map<Symbol, std::pair<std::string, Rational>> unknown;
    std::vector<std::string> names;
    for (const auto& c : promoted.chart.coordinates()) {
        if (c.name.rfind("z_", 0) != 0) continue;
        names.push_back(c.name);
        for (int alpha = 0; alpha <= 2 * c.order; ++alpha) {
            known.erase(promoted.chart.jet(c.name, alpha));
            unknown[promoted.chart.jet(c.name, alpha)] = {c.name, -alpha * sym.B};
        }
    }
    if (names.empty()) throw std::invalid_argument("no promoted couplings in chart");

    std::vector<Aff> eqns;  // each must equal Lambda
    Expr L = simplify(promoted.L);
    std::vector<Expr> terms =
        L->kind == NodeKind::Sum ? std::vector<Expr>(L->args.begin(), L->args.end())
                                 : std::vector<Expr>{L};
    for (const auto& t : terms) {
        Aff a = term_weight(t, known, unknown);
        a.c -= sym.Lambda;
        eqns.push_back(a);
    }
    // gaussian elimination over the w_j
    std::map<std::string, Rational> sol;
    std::vector<Aff> rows = eqns;
    for (const auto& n : names) {
        Aff* pivot = nullptr;
        for (auto& row : rows)
            if (row.coeff.count(n) && row.coeff[n] != 0) {
                pivot = &row;
                break;
            }
        if (!pivot) continue;  // coupling free: weightless solution w = 0
        Aff p = *pivot;
        Rational pc = p.coeff[n];
        for (auto& row : rows) {
            if (&row == pivot || !row.coeff.count(n) || row.coeff[n] == 0) continue;
            Rational f = row.coeff[n] / pc;
            Aff scaled = p;
            scaled *= -f;
            row += scaled;
        }
    }
    // back-substitute: rows with a single unknown fix it
    bool progress = true;
    while (progress) {
        progress = false;
        for (auto& row : rows) {
            std::vector<std::pair<std::string, Rational>> live;
            Rational rest = row.c;
            for (const auto& [n, v] : row.coeff) {
                if (v == 0) continue;
                if (auto it = sol.find(n); it != sol.end())
                    rest += v * it->second;
                else
                    live.emplace_back(n, v);
            }
            if (live.size() == 1 && !sol.count(live[0].first)) {
                sol[live[0].first] = -rest / live[0].second;
                progress = true;
            } else if (live.empty() && rest != 0) {
                throw ReductionError("inconsistent weight balance for promoted couplings");
            }
        }
    }
    for (const auto& n : names)
        if (!sol.count(n)) sol[n] = 0;  // unconstrained coupling: leave unscaled
    // final consistency pass
    for (const auto& row : eqns) {
        Rational total = row.c;
        for (const auto& [n, v] : row.coeff) total += v * sol.at(n);
        if (total != 0) throw ReductionError("no rational weight balance for promoted couplings");
    }
    return sol;
}

std::pair<LagrangianSystem, Rational> promote_energy(const LagrangianSystem& sys,
                                                     const ScalingSymmetry& sym, int sign) {
    check_symmetry_invariants(sym);
    if (!sym.reparameterizing())
        throw std::invalid_argument("energy promotion applies only to reparameterizing (B != 0) symmetries");
    Rational lambda_E = -sym.Lambda / sym.B;
    LagrangianSystem out;
    out.z = sys.z;
    out.dT_momenta = sys.dT_momenta;
    std::optional<Symbol> eparam;
    for (Symbol p : sys.chart.parameters())
        if (p.name() == "E" && contains_symbol(sys.L, p)) eparam = p;
    bool replace = eparam.has_value();
    for (const auto& c : sys.chart.coordinates())
        out.chart.add_coordinate(c.name, c.order, c.prescribed);
    out.chart.add_coordinate("z_E", 1);
    for (Symbol p : sys.chart.parameters())
        if (!(replace && p.name() == "E")) out.chart.add_parameter(p.name());
    if (sys.chart.action()) out.chart.set_action(sys.chart.action()->name());
    Expr zterm = pow_expr(make_symbol(out.chart.jet("z_E", 1)), lambda_E);
    if (replace)
        out.L = simplify(substitute(sys.L, {{*eparam, zterm}}));
    else
        out.L = simplify(sys.L + make_int(sign) * zterm);
    return {out, lambda_E};
}

HamiltonianSystem symplectify(const HamiltonianSystem& contact, const std::string& prefix) {
    if (!contact.contact())
        throw std::invalid_argument("symplectify needs a contact Hamiltonian system");
    HamiltonianSystem out;
    out.chart.add_coordinate("y", 0);
    for (const auto& c : contact.chart.coordinates())
        out.chart.add_coordinate(c.name, c.order, c.prescribed);
    for (Symbol p : contact.chart.parameters()) out.chart.add_parameter(p.name());
    Symbol y = out.chart.jet("y", 0);
    Expr ye = make_symbol(y);

    Symbol Py = Symbol::intern(prefix + "0_chi", SymKind::Momentum, "chi", 0);
    out.chart.add_symbol(Py);
    out.pairs.push_back({y, Py});

    std::map<Symbol, Expr> to_sym;   // contact vars -> symplectified
    std::map<Symbol, Expr> from_sym; // symplectified -> contact vars (for checks)
    to_sym[*contact.z] = make_symbol(Py);
    from_sym[Py] = make_symbol(*contact.z);
    for (const auto& pr : contact.pairs) {
        int level = pr.p.base() == "chi" ? pr.p.order() + 1 : pr.p.order();
        Symbol P = Symbol::intern(prefix + std::to_string(level) + "_" + pr.p.base(),
                                  SymKind::Momentum, pr.p.base(), level);
        out.chart.add_symbol(P);
        out.pairs.push_back({pr.q, P});
        to_sym[pr.p] = make_symbol(P) / ye;
        from_sym[P] = ye * make_symbol(pr.p);
    }
    out.H = simplify(ye * substitute(contact.H, to_sym));

    // position and S rows must reproduce the contact equations exactly
    auto eqs = contact_hamilton_equations(contact);
    std::map<Symbol, Expr> contact_rhs(eqs.begin(), eqs.end());
    auto check = [&](Symbol var, const Expr& sym_rhs) {
        Expr back = simplify(substitute(sym_rhs, from_sym));
        if (equivalent(back, contact_rhs.at(var)) != Equivalence::ProvedEqual)
            throw ReductionError("symplectified equation for '" + var.name() +
                                 "' does not match the contact equation");
    };
    for (size_t i = 1; i < out.pairs.size(); ++i)
        check(out.pairs[i].q, differentiate(out.H, out.pairs[i].p));
    check(*contact.z, -differentiate(out.H, y));
    return out;
}

}  // namespace hocr
