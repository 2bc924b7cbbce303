#include "hocr/symbol.hpp"

#include <mutex>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace hocr {

namespace {

struct SymbolData {
    std::string name;
    SymKind kind;
    std::string base;
    int order;
};

struct Registry {
    std::mutex mu;
    std::vector<SymbolData> data{SymbolData{"", SymKind::Auxiliary, "", 0}};  // id 0 unused
    std::unordered_map<std::string, uint32_t> by_name;
};

Registry& reg() {
    static Registry r;
    return r;
}

}  // namespace

Symbol Symbol::intern(std::string_view name, SymKind kind, std::string_view base, int order) {
    auto& r = reg();
    std::lock_guard lock(r.mu);
    auto it = r.by_name.find(std::string(name));
    if (it != r.by_name.end()) {
        const auto& d = r.data[it->second];
        if (d.kind != kind || d.base != base || d.order != order)
            throw std::invalid_argument("symbol '" + std::string(name) +
                                        "' already registered with different metadata");
        Symbol s;
        s.id_ = it->second;
        return s;
    }
    uint32_t id = static_cast<uint32_t>(r.data.size());
    r.data.push_back(SymbolData{std::string(name), kind, std::string(base), order});
    r.by_name.emplace(std::string(name), id);
    Symbol s;
    s.id_ = id;
    return s;
}

Symbol Symbol::lookup(std::string_view name) {
    auto& r = reg();
    std::lock_guard lock(r.mu);
    auto it = r.by_name.find(std::string(name));
    if (it == r.by_name.end())
        throw std::invalid_argument("unknown symbol '" + std::string(name) + "'");
    Symbol s;
    s.id_ = it->second;
    return s;
}

const std::string& Symbol::name() const { return reg().data[id_].name; }
SymKind Symbol::kind() const { return reg().data[id_].kind; }
const std::string& Symbol::base() const { return reg().data[id_].base; }
int Symbol::order() const { return reg().data[id_].order; }

bool Symbol::operator<(const Symbol& o) const {
    if (id_ == o.id_) return false;
    return name() < o.name();
}

std::string jet_name(std::string_view base, int alpha) {
    std::string n(base);
    if (alpha <= 0) return n;
    if (alpha <= 3) {
        for (int i = 0; i < alpha; ++i) n += '\'';
        return n;
    }
    return n + "[" + std::to_string(alpha) + "]";
}

}  // namespace hocr
