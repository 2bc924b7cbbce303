#pragma once

#include <optional>
#include <vector>

#include "hocr/parser.hpp"

namespace hocr {

/// A jet chart: configuration coordinates with per-coordinate highest
/// Lagrangian order k, their time-derivative (jet) symbols up to order 2k
/// (the Euler-Lagrange equations of an order-k Lagrangian reach q^(2k)),
/// plus parameters, an optional action variable (contact systems), and
/// extra named symbols such as momenta.
///
/// A coordinate may be marked `prescribed`: its jets participate in the
/// total time derivative but no Euler-Lagrange equation is formed for it
/// (e.g. a lapse function fixed by hand).
class JetChart {
public:
    struct Coord {
        std::string name;
        int order;        // highest jet order appearing in the Lagrangian
        bool prescribed;
    };

    JetChart();

    void add_coordinate(const std::string& name, int order, bool prescribed = false);
    void add_parameter(const std::string& name);
    void set_action(const std::string& name);  // e.g. "z" or "S"
    void add_symbol(Symbol s);                 // extra resolvable name (momenta etc.)

    const std::vector<Coord>& coordinates() const { return coords_; }
    /// Variational coordinates only (prescribed ones excluded).
    std::vector<Coord> variational_coordinates() const;
    bool has_coordinate(const std::string& base) const;
    int order_of(const std::string& base) const;  // throws if unknown
    int max_jet_order(const std::string& base) const { return 2 * order_of(base); }

    /// Jet symbol q^(alpha) of a coordinate; alpha in [0, 2k].
    Symbol jet(const std::string& base, int alpha) const;

    Symbol time() const { return time_; }
    std::optional<Symbol> action() const { return action_; }
    std::vector<Symbol> parameters() const { return params_; }
    Symbol parameter(const std::string& name) const;

    /// Strict resolver for the parser: only chart names resolve.
    SymbolResolver resolver() const;

    Expr parse(std::string_view text) const { return parse_expression(text, resolver()); }

private:
    std::vector<Coord> coords_;
    std::vector<Symbol> params_;
    std::vector<Symbol> extras_;
    std::optional<Symbol> action_;
    Symbol time_;
    const Coord* find(const std::string& base) const;
};

}  // namespace hocr
