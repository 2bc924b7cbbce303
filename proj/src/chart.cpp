#include "hocr/chart.hpp"

#include <stdexcept>

namespace hocr {

JetChart::JetChart() : time_(Symbol::intern("t", SymKind::Time)) {}

const JetChart::Coord* JetChart::find(const std::string& base) const {
    for (const auto& c : coords_)
        if (c.name == base) return &c;
    return nullptr;
}

void JetChart::add_coordinate(const std::string& name, int order, bool prescribed) {
    // order 0 admits algebraic (derivative-free) variables such as an
    // eliminated chi or a symplectification scale
    if (order < 0) throw std::invalid_argument("coordinate order must be >= 0");
    if (find(name)) throw std::invalid_argument("duplicate coordinate '" + name + "'");
    coords_.push_back(Coord{name, order, prescribed});
    // intern the whole jet ladder up front so lookups and ordering are stable
    for (int a = 0; a <= 2 * order; ++a)
        Symbol::intern(jet_name(name, a), a == 0 ? SymKind::Coordinate : SymKind::Jet,
                       name, a);
}

void JetChart::add_parameter(const std::string& name) {
    params_.push_back(Symbol::intern(name, SymKind::Parameter));
}

void JetChart::set_action(const std::string& name) {
    action_ = Symbol::intern(name, SymKind::Action);
}

void JetChart::add_symbol(Symbol s) { extras_.push_back(s); }

std::vector<JetChart::Coord> JetChart::variational_coordinates() const {
    std::vector<Coord> out;
    for (const auto& c : coords_)
        if (!c.prescribed) out.push_back(c);
    return out;
}

bool JetChart::has_coordinate(const std::string& base) const { return find(base) != nullptr; }

int JetChart::order_of(const std::string& base) const {
    const Coord* c = find(base);
    if (!c) throw std::invalid_argument("unknown coordinate '" + base + "'");
    return c->order;
}

Symbol JetChart::jet(const std::string& base, int alpha) const {
    const Coord* c = find(base);
    if (!c) throw std::invalid_argument("unknown coordinate '" + base + "'");
    if (alpha < 0 || alpha > 2 * c->order)
        throw std::invalid_argument("jet order " + std::to_string(alpha) +
                                    " out of range for coordinate '" + base +
                                    "' (max " + std::to_string(2 * c->order) + ")");
    return Symbol::lookup(jet_name(base, alpha));
}

Symbol JetChart::parameter(const std::string& name) const {
    for (Symbol p : params_)
        if (p.name() == name) return p;
    throw std::invalid_argument("unknown parameter '" + name + "'");
}

SymbolResolver JetChart::resolver() const {
    return [this](const std::string& base, int order) -> Symbol {
        if (const Coord* c = find(base)) {
            if (order > 2 * c->order)
                throw std::invalid_argument("jet order " + std::to_string(order) +
                                            " exceeds chart bound for '" + base + "'");
            return Symbol::lookup(jet_name(base, order));
        }
        if (order == 0) {
            for (Symbol p : params_)
                if (p.name() == base) return p;
            for (Symbol s : extras_)
                if (s.name() == base) return s;
            if (action_ && action_->name() == base) return *action_;
            if (base == time_.name()) return time_;
        }
        throw std::invalid_argument("unknown identifier '" + jet_name(base, order) + "'");
    };
}

}  // namespace hocr
