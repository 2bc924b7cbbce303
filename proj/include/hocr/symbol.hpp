#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace hocr {

enum class SymKind {
    Coordinate,  // order-0 configuration variable
    Jet,         // time derivative of a coordinate, order >= 1
    Momentum,    // conjugate momentum symbol p^level_base
    Action,      // z on the Lagrangian side, S on the reduced side
    Parameter,
    Time,
    Auxiliary,
};

/// Interned symbol handle. Identity is the name; kind/base/order are
/// metadata fixed at first registration. Comparison is lexicographic by
/// name so canonical expression ordering is independent of creation order.
class Symbol {
public:
    Symbol() : id_(0) {}

    static Symbol intern(std::string_view name, SymKind kind,
                         std::string_view base = {}, int order = 0);
    static Symbol lookup(std::string_view name);  // throws if unknown

    const std::string& name() const;
    SymKind kind() const;
    const std::string& base() const;  // underlying coordinate for Jet/Momentum
    int order() const;                // jet order or momentum level

    bool valid() const { return id_ != 0; }
    bool operator==(const Symbol& o) const { return id_ == o.id_; }
    bool operator!=(const Symbol& o) const { return id_ != o.id_; }
    bool operator<(const Symbol& o) const;

    uint32_t id() const { return id_; }

private:
    explicit Symbol(uint32_t id) : id_(id) {}
    uint32_t id_;
};

/// Name of the jet of `base` at derivative order `alpha`:
/// "q" (0), "q'" .. "q'''" (1-3), "q[4]" and beyond.
std::string jet_name(std::string_view base, int alpha);

}  // namespace hocr
