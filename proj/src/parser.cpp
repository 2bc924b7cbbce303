#include "hocr/parser.hpp"

#include <cctype>

namespace hocr {

namespace {

struct Token {
    enum Kind { Num, Ident, Op, LParen, RParen, End } kind;
    size_t pos;
    Rational num;
    std::string base;  // Ident
    int order = 0;     // Ident
    char op = 0;
};

struct Lexer {
    std::string_view src;
    size_t i = 0;
    Token tok;

    explicit Lexer(std::string_view s) : src(s) { advance(); }

    void advance() {
        while (i < src.size() && std::isspace(static_cast<unsigned char>(src[i]))) ++i;
        tok = Token{Token::End, i};
        if (i >= src.size()) return;
        char c = src[i];
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
            lex_number();
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            lex_ident();
            return;
        }
        switch (c) {
            case '(': tok.kind = Token::LParen; ++i; return;
            case ')': tok.kind = Token::RParen; ++i; return;
            case '+': case '-': case '*': case '/': case '^':
                tok.kind = Token::Op;
                tok.op = c;
                ++i;
                return;
        }
        throw ParseError(std::string("unexpected character '") + c + "'", i);
    }

    void lex_number() {
        tok.kind = Token::Num;
        Int mant = 0;
        int frac_digits = 0;
        while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i])))
            mant = mant * 10 + (src[i++] - '0');
        if (i < src.size() && src[i] == '.') {
            ++i;
            if (i >= src.size() || !std::isdigit(static_cast<unsigned char>(src[i])))
                throw ParseError("expected digits after decimal point", i);
            while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) {
                mant = mant * 10 + (src[i++] - '0');
                ++frac_digits;
            }
        }
        long long exp10 = 0;
        if (i < src.size() && (src[i] == 'e' || src[i] == 'E')) {
            size_t save = i;
            ++i;
            bool neg = false;
            if (i < src.size() && (src[i] == '+' || src[i] == '-')) neg = (src[i++] == '-');
            if (i >= src.size() || !std::isdigit(static_cast<unsigned char>(src[i]))) {
                i = save;  // not an exponent; 'e' starts an identifier
            } else {
                while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i])))
                    exp10 = exp10 * 10 + (src[i++] - '0');
                if (neg) exp10 = -exp10;
            }
        }
        Rational v(mant);
        long long shift = exp10 - frac_digits;
        Int p = 1;
        for (long long k = 0; k < std::llabs(shift); ++k) p *= 10;
        if (shift >= 0) v *= Rational(p);
        else v /= Rational(p);
        tok.num = v;
    }

    void lex_ident() {
        tok.kind = Token::Ident;
        size_t start = i;
        while (i < src.size() &&
               (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_'))
            ++i;
        tok.base = std::string(src.substr(start, i - start));
        tok.order = 0;
        while (i < src.size() && src[i] == '\'') {
            ++tok.order;
            ++i;
            if (tok.order > 3)
                throw ParseError("more than three primes; use bracket notation", start);
        }
        if (tok.order == 0 && i < src.size() && src[i] == '[') {
            size_t bpos = i++;
            int o = 0;
            if (i >= src.size() || !std::isdigit(static_cast<unsigned char>(src[i])))
                throw ParseError("expected derivative order after '['", bpos);
            while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i])))
                o = o * 10 + (src[i++] - '0');
            if (i >= src.size() || src[i] != ']')
                throw ParseError("expected ']'", i);
            ++i;
            tok.order = o;
        }
    }
};

struct Parser {
    Lexer lex;
    const SymbolResolver& resolve;

    Parser(std::string_view s, const SymbolResolver& r) : lex(s), resolve(r) {}

    bool at_op(char c) const { return lex.tok.kind == Token::Op && lex.tok.op == c; }

    Expr expr() {
        Expr lhs = term();
        std::vector<Expr> terms{lhs};
        while (at_op('+') || at_op('-')) {
            bool minus = lex.tok.op == '-';
            lex.advance();
            Expr rhs = term();
            terms.push_back(minus ? -rhs : rhs);
        }
        return terms.size() == 1 ? terms[0] : add(std::move(terms));
    }

    Expr term() {
        Expr lhs = unary();
        while (at_op('*') || at_op('/')) {
            bool div = lex.tok.op == '/';
            lex.advance();
            Expr rhs = unary();
            lhs = div ? lhs / rhs : lhs * rhs;
        }
        return lhs;
    }

    Expr unary() {
        if (at_op('-')) {
            lex.advance();
            return -unary();
        }
        if (at_op('+')) {
            lex.advance();
            return unary();
        }
        return power();
    }

    Expr power() {
        Expr base = atom();
        if (at_op('^')) {
            size_t pos = lex.tok.pos;
            lex.advance();
            Expr e = unary();  // right associative; covers ^-2 and ^(1/2)
            auto r = as_rational(e);
            if (!r) throw ParseError("exponent must be a rational constant", pos);
            return pow_expr(base, *r);
        }
        return base;
    }

    Expr atom() {
        Token t = lex.tok;
        switch (t.kind) {
            case Token::Num:
                lex.advance();
                return make_rational(t.num);
            case Token::LParen: {
                lex.advance();
                Expr e = expr();
                if (lex.tok.kind != Token::RParen)
                    throw ParseError("expected ')'", lex.tok.pos);
                lex.advance();
                return e;
            }
            case Token::Ident: {
                lex.advance();
                if (t.order == 0 && lex.tok.kind == Token::LParen) {
                    std::optional<Func> f;
                    bool is_sqrt = t.base == "sqrt";
                    if (t.base == "exp") f = Func::Exp;
                    else if (t.base == "log") f = Func::Log;
                    else if (t.base == "sin") f = Func::Sin;
                    else if (t.base == "cos") f = Func::Cos;
                    if (f || is_sqrt) {
                        lex.advance();
                        Expr a = expr();
                        if (lex.tok.kind != Token::RParen)
                            throw ParseError("expected ')'", lex.tok.pos);
                        lex.advance();
                        return is_sqrt ? sqrt_expr(a) : call(*f, a);
                    }
                }
                try {
                    return make_symbol(resolve(t.base, t.order));
                } catch (const std::invalid_argument& e) {
                    throw ParseError(e.what(), t.pos);
                }
            }
            default:
                throw ParseError("expected a number, symbol, or '('", t.pos);
        }
    }
};

}  // namespace

Expr parse_expression(std::string_view text, const SymbolResolver& resolver) {
    Parser p(text, resolver);
    Expr e = p.expr();
    if (p.lex.tok.kind != Token::End)
        throw ParseError("unexpected trailing input", p.lex.tok.pos);
    return e;
}

Expr parse_expression(std::string_view text) {
    return parse_expression(text, [](const std::string& base, int order) {
        std::string name = jet_name(base, order);
        try {
            return Symbol::lookup(name);
        } catch (const std::invalid_argument&) {
            return Symbol::intern(name, order > 0 ? SymKind::Jet : SymKind::Auxiliary,
                                  base, order);
        }
    });
}

}  // namespace hocr
