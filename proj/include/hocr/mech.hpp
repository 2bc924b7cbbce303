#pragma once

#include <set>
#include <utility>

#include "hocr/chart.hpp"

namespace hocr {

/// Tulczyjew total time derivative on jet coordinates:
/// d_T f = sum_{i,alpha} q^i_{alpha+1} * df/dq^i_alpha.
/// Throws if f depends on a top jet (order 2k) so the image would need
/// symbols beyond the chart.
Expr d_T(const Expr& f, const JetChart& chart);

/// Lagrangian total derivative of contact mechanics:
/// D_L f = d_T f + L df/dz - f dL/dz. Not a derivation; the Leibniz
/// defect is fg dL/dz.
Expr D_L(const Expr& f, const Expr& L, const JetChart& chart, Symbol z);

struct LagrangianSystem {
    JetChart chart;
    Expr L;
    std::optional<Symbol> z;  // action symbol; engages the contact (Herglotz) variant
    // coordinates whose momenta use d_T even on a contact chart (the reduced
    // Herglotz Lagrangian defines unscaled momenta this way)
    std::set<std::string> dT_momenta = {};
    bool contact() const { return z.has_value(); }
};

/// (coordinate base, momentum level alpha) -> expression in jet variables
using MomentaSet = std::map<std::pair<std::string, int>, Expr>;

/// Jacobi-Ostrogradsky momenta
///   phat^{r-1}_i = sum_{alpha=0}^{k-r} (-1)^alpha d^alpha (dL/dq^i_{r+alpha})
/// with d = d_T, or D_L for contact systems.
MomentaSet jacobi_ostrogradsky_momenta(const LagrangianSystem& sys);

/// Energy E_L = sum_{alpha=0}^{k-1} phat^alpha_i q^i_{alpha+1} - L in jet
/// variables.
Expr energy_function(const LagrangianSystem& sys);

/// Euler-Lagrange residuals sum_{alpha=0}^{k} (-1)^alpha d_T^alpha
/// (dL/dq^i_alpha) per variational coordinate (set to zero).
std::vector<std::pair<std::string, Expr>> euler_lagrange(const LagrangianSystem& sys);

/// Herglotz residuals: same alternating sum with D_L in place of d_T.
/// The z-constraint zdot = L is implicit (handled at compile time).
std::vector<std::pair<std::string, Expr>> herglotz_equations(const LagrangianSystem& sys);

/// Solve a residual for the top derivative q^coord_{2k}, which enters
/// linearly for regular systems. Returns nullopt when the coefficient
/// vanishes, still contains the top jet, or another coordinate's top jet
/// appears.
std::optional<Expr> solve_top_derivative(const Expr& residual, const JetChart& chart,
                                         const std::string& coord);

/// det of the top-derivative Hessian d^2 L / du_i du_j over variational
/// coordinates (u_i the order-k_i jet).
Expr hessian_determinant(const LagrangianSystem& sys);

enum class Regularity { Regular, Singular };
/// Symbolic determinant; when not identically zero, decided numerically at
/// the binding.
Regularity regularity_check(const LagrangianSystem& sys, const Binding& at);

struct PhasePair {
    Symbol q;
    Symbol p;
};

struct HamiltonianSystem {
    JetChart chart;  // resolves positions, momenta, and the action symbol
    Expr H;
    std::vector<PhasePair> pairs;       // canonical (q, p) pairs in chart order
    std::optional<Symbol> z;            // action symbol for contact systems
    MomentaSet momenta;                 // p symbols -> jet expressions (Legendre data)
    std::map<Symbol, Expr> top_inverse; // q^i_k -> expression in (q, p)
    bool contact() const { return z.has_value(); }
    Symbol momentum(const std::string& base, int level) const;
};

/// Legendre-Ostrogradsky transform. Momentum symbols are named
/// <prefix><level>_<base> (e.g. p0_q, p1_q). The top momentum relation
/// p^{k-1} = dL/dq_k is inverted symbolically; supported classes are
/// linear-in-top-jet and single rational power c*u^m. Throws when the
/// relation is not invertible or couples different coordinates' top jets.
HamiltonianSystem legendre_ostrogradsky(const LagrangianSystem& sys,
                                        const std::string& prefix = "p");

/// Solve g(u) = p for the symbol u. Supported classes: linear in u, and
/// shifted power c0*(u + shift)^m with rational m (c0, shift free of u).
/// Throws std::domain_error when g falls outside these classes.
Expr invert_monotone_relation(const Expr& g, Symbol u, const Expr& p);

/// qdot^i_alpha = dH/dp^alpha_i, pdot^alpha_i = -dH/dq^i_alpha.
std::vector<std::pair<Symbol, Expr>> hamilton_equations(const HamiltonianSystem& h);

/// Contact Hamilton equations:
///   qdot = dH/dp, pdot = -(dH/dq + p dH/dz), zdot = sum p dH/dp - H.
std::vector<std::pair<Symbol, Expr>> contact_hamilton_equations(const HamiltonianSystem& h);

}  // namespace hocr
