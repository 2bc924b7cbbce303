#pragma once

#include "hocr/chart.hpp"

namespace hocr {

struct IntegrationError : std::runtime_error {
    double last_good_time;
    IntegrationError(const std::string& msg, double t)
        : std::runtime_error(msg + " (last good time " + std::to_string(t) + ")"),
          last_good_time(t) {}
};

/// Flat evaluation tape: expressions compiled once, with shared subtrees
/// evaluated once per call.
class Tape {
public:
    /// roots evaluated against `states` (+ time); parameters are folded in.
    Tape() = default;
    Tape(const std::vector<Expr>& roots, const std::vector<Symbol>& states,
         const Binding& params, Symbol time);

    /// y has one value per state symbol; out has one value per root.
    void eval(double t, const double* y, double* out) const;
    size_t outputs() const { return roots_.size(); }

private:
    enum class Op { Const, Var, Time, Add, Mul, PowInt, PowReal, Exp, Log, Sin, Cos };
    struct Instr {
        Op op;
        int arg0 = 0;    // args offset (Add/Mul) or operand slot
        int nargs = 0;
        double c = 0;    // Const value, PowReal exponent
        long long n = 0; // Var index, PowInt exponent
        int diag = -1;   // index into diag_ for domain errors
    };
    std::vector<Instr> code_;
    std::vector<int> args_;
    std::vector<int> roots_;
    std::vector<std::string> diag_;
    int emit(const Expr& e, const std::vector<Symbol>& states, const Binding& params,
             Symbol time, std::map<const ExprNode*, int>& memo);
};

struct OdeSystem {
    std::vector<Symbol> state;              // ordered state symbols
    std::vector<Expr> rhs;                  // d(state)/dt, same order
    std::vector<std::pair<Symbol, Expr>> aux;  // readouts recorded per sample
    Binding params;
    Symbol time;
    Tape rhs_tape;
    Tape aux_tape;

    void rhs_eval(double t, const double* y, double* dydt) const { rhs_tape.eval(t, y, dydt); }
    int index_of(Symbol s) const;
};

/// Compile explicit first-order equations (symbol, rhs). Every rhs may
/// reference only the given state symbols, bound parameters, and time.
OdeSystem compile_first_order(const std::vector<std::pair<Symbol, Expr>>& eqns,
                              const Binding& params,
                              const std::vector<std::pair<Symbol, Expr>>& aux = {});

/// Compile a jet-space system: for each (coordinate, solved top expression)
/// the states are the jets 0..top-1 with chain rule rhs, the top jet driven
/// by the solved expression. `extra` appends further first-order states
/// (action variable, time co-integration, ...).
OdeSystem compile_jet_system(const JetChart& chart,
                             const std::vector<std::pair<std::string, Expr>>& solved_tops,
                             const Binding& params,
                             const std::vector<std::pair<Symbol, Expr>>& extra = {},
                             const std::vector<std::pair<Symbol, Expr>>& aux = {});

struct Trajectory {
    std::vector<double> times;
    std::vector<std::vector<double>> rows;  // state values then aux values
    std::vector<std::string> columns;       // names matching row layout
    std::string parameterization = "physical-time";  // or "reparameterized"
    Rational repar_exponent = 0;            // (1 - Lambda); dt/dtau = e^{(1-Lambda) rho}

    size_t column(const std::string& name) const;  // throws if absent
    std::vector<double> series(const std::string& name) const;
};

/// Classical RK4 with samples at every step.
Trajectory integrate_fixed(const OdeSystem& sys, const std::vector<double>& y0,
                           double t0, double t1, double dt);

/// Dormand-Prince 5(4) with PI step control; samples at accepted steps, or
/// at `sample_times` (cubic Hermite dense output) when provided.
Trajectory integrate_adaptive(const OdeSystem& sys, const std::vector<double>& y0,
                              double t0, double t1, double rel_tol, double abs_tol,
                              const std::vector<double>* sample_times = nullptr);

/// Append a physical-time column t(tau) to a reparameterized trajectory by
/// quadrature of dt/dtau = e^{(1-Lambda) rho} along the rho column.
Trajectory reconstruct_time(const Trajectory& traj, const Rational& lambda_deg,
                            const std::string& rho_column = "rho");

}  // namespace hocr
