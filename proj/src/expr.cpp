#include "hocr/expr.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

namespace hocr {

namespace {

size_t hash_combine(size_t h, size_t v) {
    return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

size_t hash_rational(const Rational& r) {
    std::hash<std::string> h;
    return h(r.str());
}

Expr make_node(ExprNode n) {
    size_t h = static_cast<size_t>(n.kind) * 1315423911ULL;
    switch (n.kind) {
        case NodeKind::Rational: h = hash_combine(h, hash_rational(n.rat)); break;
        case NodeKind::Float: h = hash_combine(h, std::hash<double>{}(n.flt)); break;
        case NodeKind::Sym: h = hash_combine(h, std::hash<std::string>{}(n.sym.name())); break;
        case NodeKind::Call: h = hash_combine(h, static_cast<size_t>(n.func)); break;
        case NodeKind::Pow: h = hash_combine(h, hash_rational(n.rat)); break;
        default: break;
    }
    for (const auto& a : n.args) h = hash_combine(h, a->hash);
    n.hash = h;
    return std::make_shared<const ExprNode>(std::move(n));
}

int rank(NodeKind k) {
    switch (k) {
        case NodeKind::Rational: return 0;
        case NodeKind::Float: return 1;
        case NodeKind::Sym: return 2;
        case NodeKind::Call: return 3;
        case NodeKind::Pow: return 4;
        case NodeKind::Prod: return 5;
        case NodeKind::Sum: return 6;
    }
    return 7;
}

struct CmpLess {
    bool operator()(const Expr& a, const Expr& b) const { return compare(a, b) < 0; }
};

bool is_integer(const Rational& r) { return denominator(r) == 1; }

// exact integer k-th root, or nullopt
std::optional<Int> iroot(const Int& n, unsigned k) {
    if (n < 0) return std::nullopt;
    if (n == 0 || n == 1) return n;
    Int lo = 1, hi = n;
    while (lo < hi) {
        Int mid = (lo + hi + 1) / 2;
        Int p = 1;
        bool over = false;
        for (unsigned i = 0; i < k; ++i) {
            p *= mid;
            if (p > n) { over = true; break; }
        }
        if (over) hi = mid - 1; else lo = mid;
    }
    Int p = 1;
    for (unsigned i = 0; i < k; ++i) p *= lo;
    if (p == n) return lo;
    return std::nullopt;
}

// exact value of c^e when it is rational, otherwise nullopt (c > 0)
std::optional<Rational> rational_pow_exact(const Rational& c, const Rational& e) {
    if (is_integer(e)) {
        Rational out = 1;
        Int n = numerator(e);
        bool invert = n < 0;
        if (invert) n = -n;
        Rational base = c;
        while (n > 0) {
            if (n % 2 == 1) out *= base;
            base *= base;
            n /= 2;
        }
        if (invert) out = Rational(1) / out;
        return out;
    }
    if (c == 0) return std::nullopt;
    // negative bases admit a real root exactly when the exponent's
    // denominator is odd; the sign then follows from the numerator
    bool neg = c < 0;
    if (neg && denominator(e) % 2 == 0) return std::nullopt;
    Rational a = neg ? Rational(-c) : c;
    unsigned k = static_cast<unsigned>(denominator(e));
    auto rn = iroot(numerator(a), k);
    auto rd = iroot(denominator(a), k);
    if (!rn || !rd) return std::nullopt;
    Rational root(*rn, *rd);
    if (neg) root = -root;
    return rational_pow_exact(root, Rational(numerator(e)));
}

}  // namespace

double rational_to_double(const Rational& r) { return r.template convert_to<double>(); }

const Expr& zero() {
    static Expr z = make_node(ExprNode{.kind = NodeKind::Rational, .rat = 0});
    return z;
}
const Expr& one() {
    static Expr o = make_node(ExprNode{.kind = NodeKind::Rational, .rat = 1});
    return o;
}

Expr make_rational(Rational v) {
    if (v == 0) return zero();
    if (v == 1) return one();
    return make_node(ExprNode{.kind = NodeKind::Rational, .rat = std::move(v)});
}

Expr make_int(long long v) { return make_rational(Rational(v)); }

Expr make_float(double v) {
    if (!std::isfinite(v)) throw ExprError("non-finite float constant");
    return make_node(ExprNode{.kind = NodeKind::Float, .flt = v});
}

Expr make_symbol(Symbol s) {
    if (!s.valid()) throw ExprError("invalid symbol");
    return make_node(ExprNode{.kind = NodeKind::Sym, .sym = s});
}

int compare(const Expr& a, const Expr& b) {
    if (a.get() == b.get()) return 0;
    int ra = rank(a->kind), rb = rank(b->kind);
    if (ra != rb) return ra < rb ? -1 : 1;
    switch (a->kind) {
        case NodeKind::Rational:
            return a->rat == b->rat ? 0 : (a->rat < b->rat ? -1 : 1);
        case NodeKind::Float:
            return a->flt == b->flt ? 0 : (a->flt < b->flt ? -1 : 1);
        case NodeKind::Sym: {
            if (a->sym == b->sym) return 0;
            return a->sym < b->sym ? -1 : 1;
        }
        case NodeKind::Call: {
            if (a->func != b->func) return a->func < b->func ? -1 : 1;
            return compare(a->arg(), b->arg());
        }
        case NodeKind::Pow: {
            int c = compare(a->base(), b->base());
            if (c != 0) return c;
            return a->rat == b->rat ? 0 : (a->rat < b->rat ? -1 : 1);
        }
        case NodeKind::Prod:
        case NodeKind::Sum: {
            size_t n = std::min(a->args.size(), b->args.size());
            for (size_t i = 0; i < n; ++i) {
                int c = compare(a->args[i], b->args[i]);
                if (c != 0) return c;
            }
            if (a->args.size() != b->args.size())
                return a->args.size() < b->args.size() ? -1 : 1;
            return 0;
        }
    }
    return 0;
}

bool equal(const Expr& a, const Expr& b) {
    if (a->hash != b->hash) return false;
    return compare(a, b) == 0;
}

bool is_zero(const Expr& e) { return e->kind == NodeKind::Rational && e->rat == 0; }
bool is_one(const Expr& e) { return e->kind == NodeKind::Rational && e->rat == 1; }
bool is_rational(const Expr& e) { return e->kind == NodeKind::Rational; }

std::optional<Rational> as_rational(const Expr& e) {
    if (e->kind == NodeKind::Rational) return e->rat;
    return std::nullopt;
}

void collect_free_symbols(const Expr& e, std::set<Symbol>& out) {
    if (e->kind == NodeKind::Sym) {
        out.insert(e->sym);
        return;
    }
    for (const auto& a : e->args) collect_free_symbols(a, out);
}

std::set<Symbol> free_symbols(const Expr& e) {
    std::set<Symbol> out;
    collect_free_symbols(e, out);
    return out;
}

bool contains_symbol(const Expr& e, Symbol s) {
    if (e->kind == NodeKind::Sym) return e->sym == s;
    for (const auto& a : e->args)
        if (contains_symbol(a, s)) return true;
    return false;
}

// ---------------------------------------------------------------------------
// canonical construction

namespace {

struct AddAcc {
    Rational r = 0;
    double f = 0.0;
    bool anyf = false;
    void add_rat(const Rational& c) { r += c; }
    void add_flt(double d) { anyf = true; f += d; }
    bool is_zero() const { return !anyf && r == 0; }
};

struct MulAcc {
    Rational r = 1;
    double f = 1.0;
    bool anyf = false;
    void mul_rat(const Rational& c) { r *= c; }
    void mul_flt(double d) { anyf = true; f *= d; }
    bool is_zero() const { return (!anyf && r == 0) || (anyf && f * rational_to_double(r) == 0.0) || r == 0; }
};

Expr coeff_expr(const MulAcc& c) {
    if (c.anyf) return make_float(c.f * rational_to_double(c.r));
    return make_rational(c.r);
}

// split a canonical non-Sum term into (coefficient, monomial part)
// the monomial part never has a leading constant
void split_term(const Expr& t, AddAcc& coeff_out, Expr& mono_out, Rational& rmul) {
    // rmul: multiplier applied to this term's coefficient
    if (t->kind == NodeKind::Rational) {
        coeff_out.add_rat(t->rat * rmul);
        mono_out = one();
        return;
    }
    if (t->kind == NodeKind::Float) {
        coeff_out.add_flt(t->flt * rational_to_double(rmul));
        mono_out = one();
        return;
    }
    if (t->kind == NodeKind::Prod && !t->args.empty() &&
        (t->args[0]->kind == NodeKind::Rational || t->args[0]->kind == NodeKind::Float)) {
        const Expr& c = t->args[0];
        if (c->kind == NodeKind::Rational)
            coeff_out.add_rat(c->rat * rmul);
        else
            coeff_out.add_flt(c->flt * rational_to_double(rmul));
        if (t->args.size() == 2) {
            mono_out = t->args[1];
        } else {
            ExprNode n{.kind = NodeKind::Prod};
            n.args.assign(t->args.begin() + 1, t->args.end());
            mono_out = make_node(std::move(n));
        }
        return;
    }
    coeff_out.add_rat(rmul);
    mono_out = t;
}

Expr attach_coeff(const AddAcc& c, const Expr& mono) {
    bool unit = !c.anyf && c.r == 1;
    if (is_one(mono)) {
        if (c.anyf) return make_float(c.f + rational_to_double(c.r));
        return make_rational(c.r);
    }
    if (unit) return mono;
    Expr cc = c.anyf ? make_float(c.f + rational_to_double(c.r)) : make_rational(c.r);
    ExprNode n{.kind = NodeKind::Prod};
    if (mono->kind == NodeKind::Prod) {
        n.args.reserve(mono->args.size() + 1);
        n.args.push_back(cc);
        for (const auto& a : mono->args) n.args.push_back(a);
    } else {
        n.args = {cc, mono};
    }
    return make_node(std::move(n));
}

// content of a canonical sum: rational c such that sum = c * primitive-sum,
// sign chosen so that the first term of the primitive part is positive
Rational sum_content(const Expr& s) {
    Rational content = 0;
    Rational first = 0;
    for (const auto& t : s->args) {
        Rational c = 1;
        if (t->kind == NodeKind::Rational) c = t->rat;
        else if (t->kind == NodeKind::Float) return 1;
        else if (t->kind == NodeKind::Prod && t->args[0]->kind == NodeKind::Rational)
            c = t->args[0]->rat;
        else if (t->kind == NodeKind::Prod && t->args[0]->kind == NodeKind::Float)
            return 1;
        if (first == 0) first = c;
        Rational g(boost::multiprecision::gcd(numerator(content), numerator(c)),
                   boost::multiprecision::lcm(denominator(content), denominator(c)));
        content = g;
    }
    if (content == 0) return 1;
    if (first < 0) content = -content;
    return content;
}

Expr scale_sum(const Expr& s, const Rational& inv);  // fwd (defined via add)

void collect_term_factors(const Expr& t, std::map<Expr, Rational, CmpLess>& out) {
    switch (t->kind) {
        case NodeKind::Rational:
        case NodeKind::Float:
            return;
        case NodeKind::Sym:
        case NodeKind::Call:
            out[t] += 1;
            return;
        case NodeKind::Pow:
            out[t->base()] += t->rat;
            return;
        case NodeKind::Prod:
            for (const auto& a : t->args) collect_term_factors(a, out);
            return;
        case NodeKind::Sum:
            out[t] += 1;
            return;
    }
}

// monomial part shared by every term of a canonical sum (rational content
// excluded): per base, the min exponent when all are positive or the max
// when all are negative
std::map<Expr, Rational, CmpLess> common_sum_factors(const Expr& s) {
    std::map<Expr, Rational, CmpLess> common;
    collect_term_factors(s->args[0], common);
    for (size_t i = 1; i < s->args.size() && !common.empty(); ++i) {
        std::map<Expr, Rational, CmpLess> fs;
        collect_term_factors(s->args[i], fs);
        for (auto it = common.begin(); it != common.end();) {
            auto jt = fs.find(it->first);
            if (jt == fs.end() || jt->second == 0 ||
                (it->second > 0) != (jt->second > 0)) {
                it = common.erase(it);
                continue;
            }
            if (it->second > 0)
                it->second = std::min(it->second, jt->second);
            else
                it->second = std::max(it->second, jt->second);
            ++it;
        }
    }
    for (auto it = common.begin(); it != common.end();)
        it = it->second == 0 ? common.erase(it) : std::next(it);
    return common;
}

struct FactorMap {
    MulAcc coeff;
    std::map<Expr, Rational, CmpLess> factors;           // base -> exponent
    std::vector<std::pair<Expr, Rational>> exp_args;     // exp(u)^e pieces
    std::vector<std::pair<Expr, unsigned>> sum_factors;  // sums to expand
    bool dead = false;                                   // became zero

    void absorb(const Expr& f, const Rational& outer, bool merge_exp);
};

void FactorMap::absorb(const Expr& f, const Rational& outer, bool merge_exp) {
    if (dead || outer == 0) return;
    switch (f->kind) {
        case NodeKind::Rational: {
            if (f->rat == 0) {
                if (outer < 0)
                    throw DomainError("zero raised to a negative power", "0^(" + outer.str() + ")");
                dead = true;
                return;
            }
            if (auto v = rational_pow_exact(f->rat, outer)) {
                coeff.mul_rat(*v);
                return;
            }
            // surd: split integer part of the exponent, keep the remainder atomic
            Rational c = f->rat;
            Rational e = outer;
            if (c < 0) {
                factors[f] += outer;  // fractional power of a negative rational
                return;
            }
            Int ip = numerator(e) / denominator(e);
            if (e < 0 && ip * denominator(e) != numerator(e)) ip -= 1;  // floor
            Rational frac = e - Rational(ip);
            if (ip != 0) coeff.mul_rat(*rational_pow_exact(c, Rational(ip)));
            if (frac != 0) {
                // key surds by integer bases so p^e and (1/p)^e cancel
                Int num = numerator(c), den = denominator(c);
                if (num != 1) factors[make_rational(Rational(num))] += frac;
                if (den != 1) factors[make_rational(Rational(den))] -= frac;
            }
            return;
        }
        case NodeKind::Float: {
            double v = std::pow(f->flt, rational_to_double(outer));
            if (!std::isfinite(v))
                throw DomainError("invalid float power", to_string(f));
            coeff.mul_flt(v);
            return;
        }
        case NodeKind::Sym:
            factors[f] += outer;
            return;
        case NodeKind::Call:
            if (f->func == Func::Exp && merge_exp) {
                exp_args.emplace_back(f->arg(), outer);
                return;
            }
            factors[f] += outer;
            return;
        case NodeKind::Pow:
            absorb(f->base(), f->rat * outer, merge_exp);
            return;
        case NodeKind::Prod:
            for (const auto& a : f->args) absorb(a, outer, merge_exp);
            return;
        case NodeKind::Sum: {
            if (is_integer(outer) && outer > 0) {
                unsigned n = static_cast<unsigned>(numerator(outer));
                sum_factors.emplace_back(f, n);
                return;
            }
            if (!is_integer(outer)) {
                // pull the shared monomial out of the radicand (bases taken
                // positive, as for powers of products)
                auto common = common_sum_factors(f);
                if (!common.empty()) {
                    std::vector<Expr> rest;
                    for (const auto& t : f->args) {
                        std::vector<Expr> fs{t};
                        for (const auto& [b, e] : common) fs.push_back(pow_expr(b, -e));
                        rest.push_back(mul(std::move(fs)));
                    }
                    for (const auto& [b, e] : common) absorb(b, e * outer, merge_exp);
                    absorb(add(std::move(rest)), outer, merge_exp);
                    return;
                }
            }
            Rational c = sum_content(f);
            // a sign pulled out of a radicand would become a constant
            // (-1)^e factor; keep it inside for fractional exponents
            if (!is_integer(outer) && c < 0) c = -c;
            if (c != 1) {
                absorb(make_rational(c), outer, merge_exp);
                factors[scale_sum(f, Rational(1) / c)] += outer;
            } else {
                factors[f] += outer;
            }
            return;
        }
    }
}

Expr finalize(FactorMap& fm);

}  // namespace

Expr add(std::vector<Expr> terms) {
    AddAcc cacc;
    std::map<Expr, AddAcc, CmpLess> monos;
    std::function<void(const Expr&, const Rational&)> take = [&](const Expr& t, const Rational& scale) {
        if (t->kind == NodeKind::Sum) {
            for (const auto& u : t->args) take(u, scale);
            return;
        }
        AddAcc c;
        Expr mono;
        Rational s = scale;
        split_term(t, c, mono, s);
        if (is_one(mono)) {
            if (c.anyf) cacc.add_flt(c.f); else cacc.add_rat(c.r);
        } else {
            AddAcc& acc = monos[mono];
            if (c.anyf) acc.add_flt(c.f); else acc.add_rat(c.r);
        }
    };
    for (const auto& t : terms) take(t, 1);

    std::vector<Expr> out;
    if (!cacc.is_zero()) {
        if (cacc.anyf) out.push_back(make_float(cacc.f + rational_to_double(cacc.r)));
        else out.push_back(make_rational(cacc.r));
    }
    for (const auto& [mono, c] : monos) {
        if (c.is_zero()) continue;
        if (c.anyf && c.f + rational_to_double(c.r) == 0.0) continue;
        out.push_back(attach_coeff(c, mono));
    }
    if (out.empty()) return zero();
    if (out.size() == 1) return out[0];
    std::sort(out.begin(), out.end(), [](const Expr& a, const Expr& b) { return compare(a, b) < 0; });
    ExprNode n{.kind = NodeKind::Sum};
    n.args = std::move(out);
    return make_node(std::move(n));
}

namespace {

Expr scale_sum(const Expr& s, const Rational& inv) {
    std::vector<Expr> ts;
    ts.reserve(s->args.size());
    Expr c = make_rational(inv);
    for (const auto& t : s->args) ts.push_back(mul({c, t}));
    return add(std::move(ts));
}

Expr finalize(FactorMap& fm) {
    if (fm.dead) return zero();
    // merge exp factors
    if (!fm.exp_args.empty()) {
        std::vector<Expr> parts;
        for (auto& [u, e] : fm.exp_args) parts.push_back(mul({make_rational(e), u}));
        Expr total = add(std::move(parts));
        if (!is_zero(total)) {
            Expr ex = call(Func::Exp, total);  // may split off power factors
            fm.exp_args.clear();
            fm.absorb(ex, 1, /*merge_exp=*/false);
            if (fm.dead) return zero();
        } else {
            fm.exp_args.clear();
        }
    }
    // sums whose accumulated exponent became a positive integer get expanded
    for (auto it = fm.factors.begin(); it != fm.factors.end();) {
        if (it->first->kind == NodeKind::Sum && is_integer(it->second) && it->second > 0) {
            fm.sum_factors.emplace_back(it->first, static_cast<unsigned>(numerator(it->second)));
            it = fm.factors.erase(it);
        } else {
            ++it;
        }
    }
    // surds whose accumulated exponent became exactly computable fold back
    // into the coefficient
    for (auto it = fm.factors.begin(); it != fm.factors.end();) {
        if (it->first->kind == NodeKind::Rational && it->second != 0) {
            if (auto v = rational_pow_exact(it->first->rat, it->second)) {
                fm.coeff.mul_rat(*v);
                it = fm.factors.erase(it);
                continue;
            }
            const Rational& c = it->first->rat;
            const Rational& e = it->second;
            if (c > 0) {
                Int ip = numerator(e) / denominator(e);
                if (e < 0 && ip * denominator(e) != numerator(e)) ip -= 1;  // floor
                if (ip != 0) {
                    fm.coeff.mul_rat(*rational_pow_exact(c, Rational(ip)));
                    it->second = e - Rational(ip);
                }
            }
        }
        ++it;
    }
    // hard (non-expandable) part
    std::vector<Expr> hard;
    for (const auto& [b, e] : fm.factors) {
        if (e == 0) continue;
        if (e == 1) {
            hard.push_back(b);
        } else {
            ExprNode p{.kind = NodeKind::Pow, .rat = e};
            p.args = {b};
            hard.push_back(make_node(std::move(p)));
        }
    }
    std::sort(hard.begin(), hard.end(), [](const Expr& a, const Expr& b) { return compare(a, b) < 0; });
    Expr core;
    if (hard.empty()) {
        core = coeff_expr(fm.coeff);
    } else {
        bool unit = !fm.coeff.anyf && fm.coeff.r == 1;
        if (fm.coeff.r == 0 || (fm.coeff.anyf && fm.coeff.f == 0.0)) return zero();
        if (unit && hard.size() == 1) {
            core = hard[0];
        } else {
            ExprNode n{.kind = NodeKind::Prod};
            if (!unit) n.args.push_back(coeff_expr(fm.coeff));
            for (auto& h : hard) n.args.push_back(std::move(h));
            core = n.args.size() == 1 ? n.args[0] : make_node(std::move(n));
        }
    }
    if (fm.sum_factors.empty()) return core;
    // distribute
    std::vector<Expr> acc{core};
    for (const auto& [s, n] : fm.sum_factors) {
        for (unsigned i = 0; i < n; ++i) {
            std::vector<Expr> next;
            next.reserve(acc.size() * s->args.size());
            for (const auto& t : acc)
                for (const auto& u : s->args) next.push_back(mul({t, u}));
            acc = std::move(next);
        }
    }
    return add(std::move(acc));
}

}  // namespace

Expr mul(std::vector<Expr> factors) {
    FactorMap fm;
    for (const auto& f : factors) {
        fm.absorb(f, 1, true);
        if (fm.dead) return zero();
    }
    return finalize(fm);
}

Expr pow_expr(const Expr& base, const Rational& exponent) {
    if (exponent == 0) return one();
    if (exponent == 1) return base;
    FactorMap fm;
    fm.absorb(base, exponent, true);
    return finalize(fm);
}

Expr sqrt_expr(const Expr& e) { return pow_expr(e, Rational(1, 2)); }

Expr call(Func f, const Expr& arg) {
    switch (f) {
        case Func::Exp: {
            if (is_zero(arg)) return one();
            if (arg->kind == NodeKind::Float) return make_float(std::exp(arg->flt));
            if (arg->kind == NodeKind::Call && arg->func == Func::Log) return arg->arg();
            // pull out rational multiples of logarithms: exp(r*log(u) + rest) = u^r * exp(rest)
            std::vector<Expr> factors;
            std::vector<Expr> rest;
            auto consider = [&](const Expr& term) {
                AddAcc c;
                Expr mono;
                Rational s = 1;
                split_term(term, c, mono, s);
                if (!c.anyf && mono->kind == NodeKind::Call && mono->func == Func::Log) {
                    factors.push_back(pow_expr(mono->arg(), c.r));
                } else {
                    rest.push_back(term);
                }
            };
            if (arg->kind == NodeKind::Sum) {
                for (const auto& t : arg->args) consider(t);
            } else {
                consider(arg);
            }
            if (!factors.empty()) {
                Expr r = add(std::move(rest));
                if (!is_zero(r)) factors.push_back(call(Func::Exp, r));
                return mul(std::move(factors));
            }
            ExprNode n{.kind = NodeKind::Call, .func = Func::Exp};
            n.args = {arg};
            return make_node(std::move(n));
        }
        case Func::Log: {
            if (is_one(arg)) return zero();
            if (arg->kind == NodeKind::Float) {
                if (arg->flt <= 0) throw DomainError("log of non-positive constant", to_string(arg));
                return make_float(std::log(arg->flt));
            }
            if (arg->kind == NodeKind::Call && arg->func == Func::Exp) return arg->arg();
            if (arg->kind == NodeKind::Pow)
                return mul({make_rational(arg->rat), call(Func::Log, arg->base())});
            ExprNode n{.kind = NodeKind::Call, .func = Func::Log};
            n.args = {arg};
            return make_node(std::move(n));
        }
        case Func::Sin: {
            if (is_zero(arg)) return zero();
            if (arg->kind == NodeKind::Float) return make_float(std::sin(arg->flt));
            ExprNode n{.kind = NodeKind::Call, .func = Func::Sin};
            n.args = {arg};
            return make_node(std::move(n));
        }
        case Func::Cos: {
            if (is_zero(arg)) return one();
            if (arg->kind == NodeKind::Float) return make_float(std::cos(arg->flt));
            ExprNode n{.kind = NodeKind::Call, .func = Func::Cos};
            n.args = {arg};
            return make_node(std::move(n));
        }
    }
    throw ExprError("unknown function");
}

Expr simplify(const Expr& e) {
    // expressions are canonical by construction; rebuild bottom-up so that
    // hand-assembled or deserialized trees are normalized too
    switch (e->kind) {
        case NodeKind::Rational:
        case NodeKind::Float:
        case NodeKind::Sym:
            return e;
        case NodeKind::Sum: {
            std::vector<Expr> ts;
            ts.reserve(e->args.size());
            for (const auto& a : e->args) ts.push_back(simplify(a));
            return add(std::move(ts));
        }
        case NodeKind::Prod: {
            std::vector<Expr> fs;
            fs.reserve(e->args.size());
            for (const auto& a : e->args) fs.push_back(simplify(a));
            return mul(std::move(fs));
        }
        case NodeKind::Pow:
            return pow_expr(simplify(e->base()), e->rat);
        case NodeKind::Call:
            return call(e->func, simplify(e->arg()));
    }
    return e;
}

Expr differentiate(const Expr& e, Symbol s) {
    if (s.kind() == SymKind::Time)
        throw std::invalid_argument("cannot differentiate with respect to the time symbol");
    switch (e->kind) {
        case NodeKind::Rational:
        case NodeKind::Float:
            return zero();
        case NodeKind::Sym:
            return e->sym == s ? one() : zero();
        case NodeKind::Sum: {
            std::vector<Expr> ts;
            for (const auto& a : e->args) ts.push_back(differentiate(a, s));
            return add(std::move(ts));
        }
        case NodeKind::Prod: {
            std::vector<Expr> ts;
            for (size_t i = 0; i < e->args.size(); ++i) {
                Expr d = differentiate(e->args[i], s);
                if (is_zero(d)) continue;
                std::vector<Expr> fs;
                for (size_t j = 0; j < e->args.size(); ++j)
                    fs.push_back(j == i ? d : e->args[j]);
                ts.push_back(mul(std::move(fs)));
            }
            return add(std::move(ts));
        }
        case NodeKind::Pow: {
            Expr db = differentiate(e->base(), s);
            if (is_zero(db)) return zero();
            return mul({make_rational(e->rat), pow_expr(e->base(), e->rat - 1), db});
        }
        case NodeKind::Call: {
            Expr du = differentiate(e->arg(), s);
            if (is_zero(du)) return zero();
            switch (e->func) {
                case Func::Exp: return mul({e, du});
                case Func::Log: return mul({pow_expr(e->arg(), -1), du});
                case Func::Sin: return mul({call(Func::Cos, e->arg()), du});
                case Func::Cos: return mul({make_int(-1), call(Func::Sin, e->arg()), du});
            }
        }
    }
    return zero();
}

namespace {

Expr substitute_impl(const Expr& e, const std::map<Symbol, Expr>& rules,
                     std::map<const ExprNode*, Expr>& cache) {
    auto it = cache.find(e.get());
    if (it != cache.end()) return it->second;
    Expr out;
    switch (e->kind) {
        case NodeKind::Rational:
        case NodeKind::Float:
            out = e;
            break;
        case NodeKind::Sym: {
            auto r = rules.find(e->sym);
            out = (r == rules.end()) ? e : r->second;
            break;
        }
        case NodeKind::Sum: {
            std::vector<Expr> ts;
            for (const auto& a : e->args) ts.push_back(substitute_impl(a, rules, cache));
            out = add(std::move(ts));
            break;
        }
        case NodeKind::Prod: {
            std::vector<Expr> fs;
            for (const auto& a : e->args) fs.push_back(substitute_impl(a, rules, cache));
            out = mul(std::move(fs));
            break;
        }
        case NodeKind::Pow:
            out = pow_expr(substitute_impl(e->base(), rules, cache), e->rat);
            break;
        case NodeKind::Call:
            out = call(e->func, substitute_impl(e->arg(), rules, cache));
            break;
    }
    cache.emplace(e.get(), out);
    return out;
}

}  // namespace

Expr substitute(const Expr& e, const std::map<Symbol, Expr>& rules) {
    std::map<const ExprNode*, Expr> cache;
    return substitute_impl(e, rules, cache);
}

double evaluate(const Expr& e, const Binding& b) {
    switch (e->kind) {
        case NodeKind::Rational:
            return rational_to_double(e->rat);
        case NodeKind::Float:
            return e->flt;
        case NodeKind::Sym: {
            auto v = b.get(e->sym);
            if (!v) throw UnboundSymbolError(e->sym.name());
            return *v;
        }
        case NodeKind::Sum: {
            double s = 0;
            for (const auto& a : e->args) s += evaluate(a, b);
            return s;
        }
        case NodeKind::Prod: {
            double p = 1;
            for (const auto& a : e->args) p *= evaluate(a, b);
            return p;
        }
        case NodeKind::Pow: {
            double vb = evaluate(e->base(), b);
            const Rational& ex = e->rat;
            if (vb == 0.0 && ex < 0)
                throw DomainError("zero raised to a negative power", to_string(e->base()));
            if (vb < 0 && !is_integer(ex))
                throw DomainError("fractional power of a negative value", to_string(e->base()));
            return std::pow(vb, rational_to_double(ex));
        }
        case NodeKind::Call: {
            double v = evaluate(e->arg(), b);
            switch (e->func) {
                case Func::Exp: return std::exp(v);
                case Func::Log:
                    if (v <= 0) throw DomainError("log of a non-positive value", to_string(e->arg()));
                    return std::log(v);
                case Func::Sin: return std::sin(v);
                case Func::Cos: return std::cos(v);
            }
        }
    }
    throw ExprError("unreachable");
}

Equivalence equivalent(const Expr& a, const Expr& b, unsigned seed) {
    Expr diff = a - b;
    if (is_zero(diff)) return Equivalence::ProvedEqual;
    std::set<Symbol> syms = free_symbols(a);
    collect_free_symbols(b, syms);
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> dist(0.1, 2.0);
    const int wanted = 16;
    int valid = 0;
    for (int attempt = 0; attempt < 25 * wanted && valid < wanted; ++attempt) {
        Binding bind;
        for (Symbol s : syms) bind.set(s, dist(rng));
        double va, vb;
        try {
            va = evaluate(a, bind);
            vb = evaluate(b, bind);
        } catch (const DomainError&) {
            continue;
        }
        if (!std::isfinite(va) || !std::isfinite(vb)) continue;
        if (std::abs(va - vb) > 1e-9 * (1.0 + std::abs(va)))
            return Equivalence::ProvedDifferent;
        ++valid;
    }
    if (valid >= wanted) return Equivalence::NumericallyEqual;
    return Equivalence::Inconclusive;
}

// ---------------------------------------------------------------------------
// printing

namespace {

std::string rat_str(const Rational& r) {
    if (denominator(r) == 1) return numerator(r).str();
    return numerator(r).str() + "/" + denominator(r).str();
}

std::string float_str(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// precedence: sum 1, product 2, power 3, atom 4
std::string print(const Expr& e, int parent) {
    switch (e->kind) {
        case NodeKind::Rational: {
            std::string s = rat_str(e->rat);
            if (parent >= 3 && (e->rat < 0 || denominator(e->rat) != 1))
                return "(" + s + ")";
            if (parent >= 2 && e->rat < 0) return "(" + s + ")";
            return s;
        }
        case NodeKind::Float: {
            std::string s = float_str(e->flt);
            if (parent >= 2 && e->flt < 0) return "(" + s + ")";
            return s;
        }
        case NodeKind::Sym:
            return e->sym.name();
        case NodeKind::Call: {
            const char* name = "";
            switch (e->func) {
                case Func::Exp: name = "exp"; break;
                case Func::Log: name = "log"; break;
                case Func::Sin: name = "sin"; break;
                case Func::Cos: name = "cos"; break;
            }
            return std::string(name) + "(" + print(e->arg(), 0) + ")";
        }
        case NodeKind::Pow: {
            std::string bs = print(e->base(), 4);
            std::string es;
            if (is_integer(e->rat) && e->rat > 0) es = rat_str(e->rat);
            else es = "(" + rat_str(e->rat) + ")";
            return bs + "^" + es;
        }
        case NodeKind::Prod: {
            std::string s;
            size_t start = 0;
            if (e->args[0]->kind == NodeKind::Rational && e->args[0]->rat == -1 &&
                e->args.size() > 1) {
                s = "-";
                start = 1;
            }
            for (size_t i = start; i < e->args.size(); ++i) {
                if (i > start) s += "*";
                s += print(e->args[i], 2);
            }
            if (parent >= 3 || (parent >= 2 && s[0] == '-')) return "(" + s + ")";
            return s;
        }
        case NodeKind::Sum: {
            std::string s;
            for (size_t i = 0; i < e->args.size(); ++i) {
                std::string ts = print(e->args[i], 1);
                if (i == 0) {
                    s = ts;
                } else if (!ts.empty() && ts[0] == '-') {
                    s += " - " + ts.substr(1);
                } else {
                    s += " + " + ts;
                }
            }
            if (parent >= 2) return "(" + s + ")";
            return s;
        }
    }
    return "?";
}

}  // namespace

std::string to_string(const Expr& e) { return print(e, 0); }

}  // namespace hocr
