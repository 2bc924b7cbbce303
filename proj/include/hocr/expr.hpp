#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "hocr/symbol.hpp"

namespace hocr {

using Int = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

enum class NodeKind { Rational, Float, Sym, Sum, Prod, Pow, Call };
enum class Func { Exp, Log, Sin, Cos };

class ExprNode;
/// Immutable, canonically-simplified symbolic expression.
/// Every constructor below returns a tree in canonical form: sums of
/// products with rational coefficients, flattened and sorted, products of
/// sums distributed, like monomials combined, exp factors merged.
using Expr = std::shared_ptr<const ExprNode>;

class ExprNode {
public:
    NodeKind kind;
    Rational rat;             // Rational node value; Pow exponent
    double flt = 0.0;         // Float node value
    Symbol sym;               // Sym node
    Func func = Func::Exp;    // Call node
    std::vector<Expr> args;   // Sum/Prod operands; Pow base; Call argument
    size_t hash = 0;

    const Expr& base() const { return args[0]; }        // Pow
    const Rational& exponent() const { return rat; }    // Pow
    const Expr& arg() const { return args[0]; }         // Call
};

struct ExprError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DomainError : ExprError {
    std::string subexpr;
    DomainError(const std::string& msg, std::string sub)
        : ExprError(msg + ": " + sub), subexpr(std::move(sub)) {}
};
struct UnboundSymbolError : ExprError {
    std::string symbol;
    explicit UnboundSymbolError(const std::string& name)
        : ExprError("unbound symbol '" + name + "'"), symbol(name) {}
};

// leaf constructors
Expr make_rational(Rational v);
Expr make_int(long long v);
Expr make_float(double v);
Expr make_symbol(Symbol s);
const Expr& zero();
const Expr& one();

// canonicalizing combinators
Expr add(std::vector<Expr> terms);
Expr mul(std::vector<Expr> factors);
Expr pow_expr(const Expr& base, const Rational& exponent);
Expr call(Func f, const Expr& arg);
Expr sqrt_expr(const Expr& e);

inline Expr operator+(const Expr& a, const Expr& b) { return add({a, b}); }
inline Expr operator-(const Expr& a, const Expr& b) {
    return add({a, mul({make_int(-1), b})});
}
inline Expr operator*(const Expr& a, const Expr& b) { return mul({a, b}); }
inline Expr operator/(const Expr& a, const Expr& b) {
    return mul({a, pow_expr(b, -1)});
}
inline Expr operator-(const Expr& a) { return mul({make_int(-1), a}); }

// structure
int compare(const Expr& a, const Expr& b);   // total order
bool equal(const Expr& a, const Expr& b);
bool is_zero(const Expr& e);
bool is_one(const Expr& e);
bool is_rational(const Expr& e);
std::optional<Rational> as_rational(const Expr& e);
void collect_free_symbols(const Expr& e, std::set<Symbol>& out);
std::set<Symbol> free_symbols(const Expr& e);
bool contains_symbol(const Expr& e, Symbol s);

// operations
Expr simplify(const Expr& e);  // canonical rebuild; idempotent
Expr differentiate(const Expr& e, Symbol s);
Expr substitute(const Expr& e, const std::map<Symbol, Expr>& rules);

/// Map from symbols to numeric values for evaluation.
struct Binding {
    std::map<Symbol, double> values;
    Binding() = default;
    Binding(std::initializer_list<std::pair<const Symbol, double>> init) : values(init) {}
    void set(Symbol s, double v) { values[s] = v; }
    void set(std::string_view name, double v) { values[Symbol::lookup(name)] = v; }
    std::optional<double> get(Symbol s) const {
        auto it = values.find(s);
        if (it == values.end()) return std::nullopt;
        return it->second;
    }
    Binding merged(const Binding& other) const {
        Binding b = *this;
        for (auto& [s, v] : other.values) b.values[s] = v;
        return b;
    }
};

double evaluate(const Expr& e, const Binding& b);

enum class Equivalence { ProvedEqual, NumericallyEqual, ProvedDifferent, Inconclusive };

/// proved-equal iff the canonical difference is 0; otherwise samples >=16
/// random bindings in (0.1, 2.0). Inconclusive when every sample hits a
/// domain error; callers treat that as proved-different.
Equivalence equivalent(const Expr& a, const Expr& b, unsigned seed = 20240901);

std::string to_string(const Expr& e);

double rational_to_double(const Rational& r);

}  // namespace hocr
