#include "hocr/integrate.hpp"

#include <algorithm>
#include <cmath>

namespace hocr {

// ---------------------------------------------------------------------------
// tape

int Tape::emit(const Expr& e, const std::vector<Symbol>& states, const Binding& params,
               Symbol time, std::map<const ExprNode*, int>& memo) {
    auto it = memo.find(e.get());
    if (it != memo.end()) return it->second;
    Instr ins;
    switch (e->kind) {
        case NodeKind::Rational:
            ins.op = Op::Const;
            ins.c = rational_to_double(e->rat);
            break;
        case NodeKind::Float:
            ins.op = Op::Const;
            ins.c = e->flt;
            break;
        case NodeKind::Sym: {
            auto pos = std::find(states.begin(), states.end(), e->sym);
            if (pos != states.end()) {
                ins.op = Op::Var;
                ins.n = pos - states.begin();
            } else if (auto v = params.get(e->sym)) {
                ins.op = Op::Const;
                ins.c = *v;
            } else if (e->sym == time) {
                ins.op = Op::Time;
            } else {
                throw UnboundSymbolError(e->sym.name());
            }
            break;
        }
        case NodeKind::Sum:
        case NodeKind::Prod: {
            std::vector<int> slots;
            for (const auto& a : e->args) slots.push_back(emit(a, states, params, time, memo));
            ins.op = e->kind == NodeKind::Sum ? Op::Add : Op::Mul;
            ins.arg0 = static_cast<int>(args_.size());
            ins.nargs = static_cast<int>(slots.size());
            args_.insert(args_.end(), slots.begin(), slots.end());
            break;
        }
        case NodeKind::Pow: {
            ins.arg0 = emit(e->base(), states, params, time, memo);
            const Rational& ex = e->rat;
            if (denominator(ex) == 1 && numerator(ex) >= -64 && numerator(ex) <= 64) {
                ins.op = Op::PowInt;
                ins.n = numerator(ex).convert_to<long long>();
            } else {
                ins.op = Op::PowReal;
                ins.c = rational_to_double(ex);
                ins.diag = static_cast<int>(diag_.size());
                diag_.push_back(to_string(e->base()));
            }
            break;
        }
        case NodeKind::Call: {
            ins.arg0 = emit(e->arg(), states, params, time, memo);
            switch (e->func) {
                case Func::Exp: ins.op = Op::Exp; break;
                case Func::Log:
                    ins.op = Op::Log;
                    ins.diag = static_cast<int>(diag_.size());
                    diag_.push_back(to_string(e->arg()));
                    break;
                case Func::Sin: ins.op = Op::Sin; break;
                case Func::Cos: ins.op = Op::Cos; break;
            }
            break;
        }
    }
    int slot = static_cast<int>(code_.size());
    code_.push_back(ins);
    memo.emplace(e.get(), slot);
    return slot;
}

Tape::Tape(const std::vector<Expr>& roots, const std::vector<Symbol>& states,
           const Binding& params, Symbol time) {
    std::map<const ExprNode*, int> memo;
    for (const auto& r : roots) roots_.push_back(emit(r, states, params, time, memo));
}

void Tape::eval(double t, const double* y, double* out) const {
    // radicand floor: fractional powers below this are a domain error, not
    // clamped — silent clamping would falsify dynamics near singular surfaces
    constexpr double kFloor = 1e-12;
    std::vector<double> s(code_.size());
    for (size_t i = 0; i < code_.size(); ++i) {
        const Instr& ins = code_[i];
        double v = 0;
        switch (ins.op) {
            case Op::Const: v = ins.c; break;
            case Op::Var: v = y[ins.n]; break;
            case Op::Time: v = t; break;
            case Op::Add:
                for (int j = 0; j < ins.nargs; ++j) v += s[args_[ins.arg0 + j]];
                break;
            case Op::Mul:
                v = 1;
                for (int j = 0; j < ins.nargs; ++j) v *= s[args_[ins.arg0 + j]];
                break;
            case Op::PowInt: {
                double b = s[ins.arg0];
                long long n = ins.n;
                bool inv = n < 0;
                if (inv) {
                    if (b == 0) throw DomainError("zero raised to a negative power", "");
                    n = -n;
                }
                v = 1;
                while (n > 0) {
                    if (n & 1) v *= b;
                    b *= b;
                    n >>= 1;
                }
                if (inv) v = 1.0 / v;
                break;
            }
            case Op::PowReal: {
                double b = s[ins.arg0];
                if (b < kFloor)
                    throw DomainError("fractional power argument below domain floor",
                                      diag_[ins.diag]);
                v = std::pow(b, ins.c);
                break;
            }
            case Op::Exp: v = std::exp(s[ins.arg0]); break;
            case Op::Log: {
                double a = s[ins.arg0];
                if (a <= 0) throw DomainError("log of a non-positive value", diag_[ins.diag]);
                v = std::log(a);
                break;
            }
            case Op::Sin: v = std::sin(s[ins.arg0]); break;
            case Op::Cos: v = std::cos(s[ins.arg0]); break;
        }
        s[i] = v;
    }
    for (size_t i = 0; i < roots_.size(); ++i) out[i] = s[roots_[i]];
}

// ---------------------------------------------------------------------------
// compilation

int OdeSystem::index_of(Symbol s) const {
    auto it = std::find(state.begin(), state.end(), s);
    if (it == state.end())
        throw std::invalid_argument("symbol '" + s.name() + "' is not a state");
    return static_cast<int>(it - state.begin());
}

namespace {

OdeSystem finish_compile(std::vector<Symbol> states, std::vector<Expr> rhs,
                         const Binding& params,
                         const std::vector<std::pair<Symbol, Expr>>& aux) {
    OdeSystem sys;
    sys.state = std::move(states);
    sys.rhs = std::move(rhs);
    sys.aux = aux;
    sys.params = params;
    sys.time = Symbol::intern("t", SymKind::Time);
    sys.rhs_tape = Tape(sys.rhs, sys.state, params, sys.time);
    std::vector<Expr> aux_exprs;
    for (const auto& [s, e] : aux) aux_exprs.push_back(e);
    sys.aux_tape = Tape(aux_exprs, sys.state, params, sys.time);
    return sys;
}

}  // namespace

OdeSystem compile_first_order(const std::vector<std::pair<Symbol, Expr>>& eqns,
                              const Binding& params,
                              const std::vector<std::pair<Symbol, Expr>>& aux) {
    std::vector<Symbol> states;
    std::vector<Expr> rhs;
    for (const auto& [s, e] : eqns) {
        states.push_back(s);
        rhs.push_back(e);
    }
    return finish_compile(std::move(states), std::move(rhs), params, aux);
}

OdeSystem compile_jet_system(const JetChart& chart,
                             const std::vector<std::pair<std::string, Expr>>& solved_tops,
                             const Binding& params,
                             const std::vector<std::pair<Symbol, Expr>>& extra,
                             const std::vector<std::pair<Symbol, Expr>>& aux) {
    std::vector<Symbol> states;
    std::vector<Expr> rhs;
    for (const auto& [coord, top_expr] : solved_tops) {
        int top = 2 * chart.order_of(coord);
        for (int a = 0; a + 1 < top; ++a) {
            states.push_back(chart.jet(coord, a));
            rhs.push_back(make_symbol(chart.jet(coord, a + 1)));
        }
        states.push_back(chart.jet(coord, top - 1));
        rhs.push_back(top_expr);
    }
    for (const auto& [s, e] : extra) {
        states.push_back(s);
        rhs.push_back(e);
    }
    return finish_compile(std::move(states), std::move(rhs), params, aux);
}

// ---------------------------------------------------------------------------
// integrators

size_t Trajectory::column(const std::string& name) const {
    for (size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return i;
    throw std::invalid_argument("no trajectory column '" + name + "'");
}

std::vector<double> Trajectory::series(const std::string& name) const {
    size_t c = column(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[c]);
    return out;
}

namespace {

void check_finite(const std::vector<double>& y, double t) {
    for (double v : y)
        if (!std::isfinite(v)) throw IntegrationError("non-finite state", t);
}

Trajectory make_traj(const OdeSystem& sys) {
    Trajectory tr;
    for (Symbol s : sys.state) tr.columns.push_back(s.name());
    for (const auto& [s, e] : sys.aux) tr.columns.push_back(s.name());
    return tr;
}

void push_row(Trajectory& tr, const OdeSystem& sys, double t, const std::vector<double>& y) {
    std::vector<double> row = y;
    if (!sys.aux.empty()) {
        std::vector<double> a(sys.aux.size());
        sys.aux_tape.eval(t, y.data(), a.data());
        row.insert(row.end(), a.begin(), a.end());
    }
    tr.times.push_back(t);
    tr.rows.push_back(std::move(row));
}

}  // namespace

Trajectory integrate_fixed(const OdeSystem& sys, const std::vector<double>& y0,
                           double t0, double t1, double dt) {
    if (dt <= 0) throw std::invalid_argument("dt must be positive");
    if (y0.size() != sys.state.size()) throw std::invalid_argument("initial state width mismatch");
    size_t n = sys.state.size();
    Trajectory tr = make_traj(sys);
    std::vector<double> y = y0, k1(n), k2(n), k3(n), k4(n), tmp(n);
    double t = t0;
    push_row(tr, sys, t, y);
    auto step = [&](double h) {
        try {
            sys.rhs_eval(t, y.data(), k1.data());
            for (size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
            sys.rhs_eval(t + 0.5 * h, tmp.data(), k2.data());
            for (size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
            sys.rhs_eval(t + 0.5 * h, tmp.data(), k3.data());
            for (size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
            sys.rhs_eval(t + h, tmp.data(), k4.data());
        } catch (const DomainError& e) {
            throw IntegrationError(std::string("domain error: ") + e.what(), t);
        }
        for (size_t i = 0; i < n; ++i)
            y[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
        t += h;
        check_finite(y, t);
        push_row(tr, sys, t, y);
    };
    const double span = t1 - t0;
    if (span <= 0) return tr;
    long long steps = static_cast<long long>(span / dt + 0.5);
    if (steps < 1) steps = 1;
    double h = span / static_cast<double>(steps);
    for (long long i = 0; i < steps; ++i) step(h);
    return tr;
}

Trajectory integrate_adaptive(const OdeSystem& sys, const std::vector<double>& y0,
                              double t0, double t1, double rel_tol, double abs_tol,
                              const std::vector<double>* sample_times) {
    if (rel_tol <= 0 || abs_tol <= 0) throw std::invalid_argument("tolerances must be positive");
    if (y0.size() != sys.state.size()) throw std::invalid_argument("initial state width mismatch");
    const size_t n = sys.state.size();
    Trajectory tr = make_traj(sys);
    std::vector<double> y = y0;
    double t = t0;
    push_row(tr, sys, t, y);
    if (t1 <= t0) return tr;

    // Dormand-Prince 5(4)
    static const double c[7] = {0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1, 1};
    static const double A[7][6] = {
        {},
        {1.0 / 5},
        {3.0 / 40, 9.0 / 40},
        {44.0 / 45, -56.0 / 15, 32.0 / 9},
        {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
        {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
        {35.0 / 384, 0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
    static const double b4[7] = {5179.0 / 57600, 0, 7571.0 / 16695, 393.0 / 640,
                                 -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};

    const double span = t1 - t0;
    const double hmin = 1e-12 * span;
    double h = span / 100.0;
    std::vector<std::vector<double>> k(7, std::vector<double>(n));
    std::vector<double> ytmp(n), ynew(n);
    size_t next_sample = 0;
    if (sample_times) {
        while (next_sample < sample_times->size() && (*sample_times)[next_sample] <= t0)
            ++next_sample;
    }
    try {
        sys.rhs_eval(t, y.data(), k[0].data());
    } catch (const DomainError& e) {
        throw IntegrationError(std::string("domain error: ") + e.what(), t);
    }
    double errprev = 1.0;
    int rejected_in_a_row = 0;
    while (t < t1) {
        if (h < hmin) throw IntegrationError("adaptive step underflow", t);
        if (t + h > t1) h = t1 - t;
        bool domain_fail = false;
        double err = 0;
        try {
            for (int s = 1; s < 7; ++s) {
                for (size_t i = 0; i < n; ++i) {
                    double acc = 0;
                    for (int j = 0; j < s; ++j) acc += A[s][j] * k[j][i];
                    ytmp[i] = y[i] + h * acc;
                }
                sys.rhs_eval(t + c[s] * h, ytmp.data(), k[s].data());
            }
            // stage 7 input is the 5th-order solution (FSAL)
            for (size_t i = 0; i < n; ++i) ynew[i] = ytmp[i];
            for (size_t i = 0; i < n; ++i) {
                double e4 = 0;
                for (int j = 0; j < 7; ++j) e4 += b4[j] * k[j][i];
                double diff = ynew[i] - (y[i] + h * e4);
                double sc = abs_tol + rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
                err += (diff / sc) * (diff / sc);
            }
            err = std::sqrt(err / static_cast<double>(n));
        } catch (const DomainError& e) {
            if (h <= 2 * hmin)
                throw IntegrationError(std::string("domain error: ") + e.what(), t);
            domain_fail = true;
        }
        if (domain_fail) {
            h *= 0.25;
            ++rejected_in_a_row;
            if (rejected_in_a_row > 200) throw IntegrationError("persistent domain failure", t);
            continue;
        }
        if (!std::isfinite(err)) {
            h *= 0.25;
            ++rejected_in_a_row;
            if (rejected_in_a_row > 200) throw IntegrationError("non-finite error estimate", t);
            continue;
        }
        if (err > 1.0) {
            double fac = std::max(0.2, 0.9 * std::pow(err, -0.2));
            h *= fac;
            ++rejected_in_a_row;
            continue;
        }
        rejected_in_a_row = 0;
        // accepted
        double tnew = t + h;
        check_finite(ynew, tnew);
        if (sample_times) {
            while (next_sample < sample_times->size() &&
                   (*sample_times)[next_sample] <= tnew + 1e-14 * span) {
                double ts = (*sample_times)[next_sample];
                double th = (ts - t) / h;
                std::vector<double> yi(n);
                for (size_t i = 0; i < n; ++i) {
                    double f0 = k[0][i], f1 = k[6][i];
                    double h00 = (1 + 2 * th) * (1 - th) * (1 - th);
                    double h10 = th * (1 - th) * (1 - th);
                    double h01 = th * th * (3 - 2 * th);
                    double h11 = th * th * (th - 1);
                    yi[i] = h00 * y[i] + h10 * h * f0 + h01 * ynew[i] + h11 * h * f1;
                }
                push_row(tr, sys, ts, yi);
                ++next_sample;
            }
        } else {
            push_row(tr, sys, tnew, ynew);
        }
        y = ynew;
        k[0] = k[6];  // FSAL
        t = tnew;
        double e = std::max(err, 1e-10);
        double fac = 0.9 * std::pow(e, -0.7 / 5.0) * std::pow(errprev, 0.4 / 5.0);
        fac = std::clamp(fac, 0.2, 5.0);
        h *= fac;
        errprev = e;
    }
    return tr;
}

Trajectory reconstruct_time(const Trajectory& traj, const Rational& lambda_deg,
                            const std::string& rho_column) {
    size_t rc = traj.column(rho_column);
    double expo = rational_to_double(Rational(1) - lambda_deg);
    Trajectory out = traj;
    out.columns.push_back("t_phys");
    double acc = 0;
    double prev_g = 0, prev_t = 0;
    for (size_t i = 0; i < traj.times.size(); ++i) {
        double g = std::exp(expo * traj.rows[i][rc]);
        if (i > 0) acc += 0.5 * (g + prev_g) * (traj.times[i] - prev_t);
        out.rows[i].push_back(acc);
        prev_g = g;
        prev_t = traj.times[i];
    }
    return out;
}

}  // namespace hocr
