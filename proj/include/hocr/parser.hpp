#pragma once

#include <functional>
#include <string_view>

#include "hocr/expr.hpp"

namespace hocr {

struct ParseError : ExprError {
    size_t pos;  // byte offset into the source text
    ParseError(const std::string& msg, size_t p)
        : ExprError(msg + " (at position " + std::to_string(p) + ")"), pos(p) {}
};

/// Maps an identifier to a symbol. `base` is the identifier with prime or
/// bracket suffixes stripped, `order` the derivative order they encode
/// (0 for a bare name). Throws std::invalid_argument to reject a name;
/// the parser converts that into a ParseError at the right position.
using SymbolResolver = std::function<Symbol(const std::string& base, int order)>;

/// Grammar (EBNF):
///   expr    = term, { ("+" | "-"), term } ;
///   term    = unary, { ("*" | "/"), unary } ;
///   unary   = [ "-" | "+" ], power ;
///   power   = atom, [ "^", unary ] ;               (* right associative *)
///   atom    = number | symbol | func, "(", expr, ")" | "(", expr, ")" ;
///   func    = "exp" | "log" | "sin" | "cos" | "sqrt" ;
///   symbol  = ident, [ "'" | "''" | "'''" | "[", integer, "]" ] ;
///   number  = digits, [ ".", digits ], [ ("e"|"E"), [ "+" | "-" ], digits ] ;
/// Numeric literals (including decimals and scientific notation) become
/// exact rationals. Exponents must simplify to rational constants.
Expr parse_expression(std::string_view text, const SymbolResolver& resolver);

/// Convenience resolver: reuses already-interned symbols by name and
/// interns unknown ones (Jet kind when order > 0, Auxiliary otherwise).
Expr parse_expression(std::string_view text);

}  // namespace hocr
