/// @file duality.hpp
/// @brief Legendre duality, gradients, Hessians and the (weighted, p-) d'Alembertians.
#pragma once

#include <functional>
#include <span>
#include <vector>

#include "lfg/finsler.hpp"
#include "lfg/jet.hpp"

namespace lfg {

// ─── Legendre transform ───────────────────────────────────────────────────────

struct DualAt {
    Vec base, omega;
    double L_star = 0.0;
    double F_star = 0.0;
    Vec legendre;  ///< ℒ*(ω)
    Mat gstar;     ///< g*_ij(ω) = g_ij(ℒ*(ω))⁻¹
    int iterations = 0;
};

/// Solves ∂L/∂v(v) = ω by damped Newton; throws NotInPolarCone unless the
/// solution is future timelike.
DualAt legendre_transform(const ModelSpec& m, const Vec& x, const Vec& omega);

/// ∂g*_ij/∂ω_k, exact through jets; stored as (i, j, k).
Tensor3 dual_metric_derivative(const ModelSpec& m, const Vec& x, const Vec& omega);

/// −ω(v) − F*(ω)F(v).
double reverse_cauchy_schwarz_check(const ModelSpec& m, const Vec& x, const Vec& v, const Vec& omega);

/// max |a_i b_j − a_j b_i| / (|a||b|); zero iff a ∥ b.
double proportionality_defect(const Vec& a, const Vec& b);

// ─── Fields and operators ─────────────────────────────────────────────────────

/// A covector field ω(x) evaluated on position jets.
using CovectorField = std::function<std::vector<Jet>(std::span<const Jet> x)>;

/// ω = sign · df for an expression f in x.
CovectorField differential_of(Expr f, int n, double sign = 1.0);

/// Every operator value at one point, computed from jets of ω = −df (or ω = dh).
struct FieldAnalysis {
    Vec base;
    Vec omega;
    Vec V;            ///< ℒ*(ω)
    double F = 0.0;   ///< F*(ω) = F(V)
    Mat g;            ///< g_V
    Mat H;            ///< H^i_j = ∂_j V^i + N^i_j(V), the Hessian as a map w ↦ Hw
    double box = 0.0;           ///< trace H
    double psi = 0.0;           ///< ψ(V)
    double dpsi = 0.0;          ///< (ψ∘η̇)′(0)
    double ddpsi = 0.0;         ///< (ψ∘η̇)″(0)
    double box_m = 0.0;         ///< trace H − ψ′
    double box_m_div = 0.0;     ///< div_m V
    Vec grad_box_m;             ///< d(div_m V)
    double p = 0.0;
    double box_mp = 0.0;           ///< div_m(F^{p−2} V)
    double box_mp_expanded = 0.0;  ///< F^{p−2}(□_m − (p−2) g_V(H V/F, V/F))
    Vec du;                     ///< d[F(V)²/2]
    double term_div = 0.0;      ///< div_m(g_V⁻¹ du)
    double term_dbox = 0.0;     ///< d(□_m)(V)
    double term_ric = 0.0;      ///< Ric(V) + ψ″
    double term_hs = 0.0;       ///< trace H²
    double ricci = 0.0;
};

/// Evaluates ℒ*(ω) and its x-derivatives to second order, then all operators.
FieldAnalysis analyze_field(const ModelSpec& m, const CovectorField& omega, const Vec& x, double p = -2.0);

struct OperatorAt {
    Vec base;
    double f_value = 0.0;
    Vec grad;
    double F_star = 0.0;
    Mat hess;
    double box = 0.0;
    double box_m = 0.0;
    double box_m_div = 0.0;
    double box_mp = 0.0;
    double box_mp_expanded = 0.0;
    double p = 0.0;
};

/// ∇(−f)(x) = ℒ*(−df(x)); throws NotTemporal when −df(x) ∉ Ω*.
OperatorAt gradient(const ModelSpec& m, Expr f, const Vec& x);

OperatorAt hessian_and_dalembertian(const ModelSpec& m, Expr f, const Vec& x, double p);

// ─── q-Lagrangian and p-Hamiltonian ───────────────────────────────────────────

struct QPair {
    double L_q = 0.0;  ///< +∞ outside the closed future cone
    double H_p = 0.0;  ///< +∞ outside Ω*
};

QPair q_lagrangian_p_hamiltonian(const ModelSpec& m, const Vec& x, const Vec& v, const Vec& omega, double q);

double q_lagrangian(const ModelSpec& m, const Vec& x, const Vec& v, double q);
double p_hamiltonian(const ModelSpec& m, const Vec& x, const Vec& omega, double p);

// ─── Ellipticity ──────────────────────────────────────────────────────────────

struct SymbolReport {
    Mat symbol;       ///< ∂(F*^{p−2} ℒ*)/∂ω in coordinates
    Mat normalized;   ///< in a g_V-orthonormal frame with e₁ = V/F, divided by F^{p−2}
    Vec eigenvalues;  ///< of `normalized`, descending
};

SymbolReport ellipticity_symbol(const ModelSpec& m, Expr f, const Vec& x, double p);

/// g-orthonormal frame (columns) with e₁ = V/F(V) and g(e₁, e₁) = −1.
Mat orthonormal_frame(const Mat& g, const Vec& V);

// ─── p-energy ─────────────────────────────────────────────────────────────────

struct EnergyReport {
    double value = 0.0;
    int grid = 0;
    double last_change = 0.0;
    bool converged = false;
};

/// ∫ H_p(−df) σ dx over the box [lo, hi] by Richardson-extrapolated midpoint
/// rules with doubling resolution.
EnergyReport p_energy(const ModelSpec& m, Expr f, const Vec& lo, const Vec& hi, double p, int grid = 4,
                      int max_depth = 7);

}  // namespace lfg
