/// @file weighted.hpp
/// @brief Weight function ψ along geodesics, weighted Ricci curvature, ε-range, comparison and Bochner checks.
#pragma once

#include <limits>

#include "lfg/dynamics.hpp"

namespace lfg {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

// ─── ψ and its derivatives ────────────────────────────────────────────────────

struct WeightAt {
    Vec x, v;
    double psi = 0.0;    ///< ψ(v) = ½ log(−det g_v) − log σ(x)
    double dpsi = 0.0;   ///< (ψ∘η̇)′(0) along the geodesic with η̇(0) = v
    double ddpsi = 0.0;  ///< (ψ∘η̇)″(0)
};

/// ψ(v) in closed form.
double psi_value(const ModelSpec& m, const Vec& x, const Vec& v);

/// Derivatives by jets of ψ composed with the spray field.
WeightAt psi_and_derivatives(const ModelSpec& m, const Vec& x, const Vec& v);

/// Derivatives by a five-point stencil on the integrated geodesic, step 1e-3/F(v).
WeightAt psi_along_trajectory(const ModelSpec& m, const Vec& x, const Vec& v);

// ─── Weighted Ricci curvature ─────────────────────────────────────────────────

/// Ric(v) + ψ″ − ψ′²/(N − n); N = ∞ drops the last term; N = n is the limit
/// N ↓ n, which is −∞ unless ψ′ = 0.
double weighted_ricci(const ModelSpec& m, const Vec& x, const Vec& v, double N);

// ─── ε-range ──────────────────────────────────────────────────────────────────

struct EpsilonSpec {
    int n = 0;
    double N = kInfinity;
    double epsilon = 0.0;
    double c = 0.0;
};

/// c(N, ε) = (1 − ε²(N − n)/(N − 1))/n; throws OutOfEpsilonRange naming the violated bound.
EpsilonSpec epsilon_constant(int n, double N, double epsilon);

// ─── Comparison ───────────────────────────────────────────────────────────────

/// e^{aψ(η̇(t))} / (c ∫₀ᵗ e^{aψ(η̇(s))} ds) with a = 2(ε − 1)/(n − 1); the
/// reverse form uses η̇(−t) and ∫_{−t}^0.
double comparison_bound(const GeodesicPath& geod, double t, const EpsilonSpec& spec, bool reverse = false);

/// ∫₀ᵀ e^{aψ(η̇(s))} ds.
double completeness_integrand(const GeodesicPath& geod, double T, const EpsilonSpec& spec);

// ─── Bochner identity and the Wylie inequality ────────────────────────────────

struct BochnerTerms {
    Vec base;
    double term_div = 0.0;   ///< div_m(∇^{∇h}[F(∇h)²/2])
    double term_dbox = 0.0;  ///< d(□_m h)(∇h)
    double term_ric = 0.0;   ///< Ric_∞(∇h)
    double term_hs = 0.0;    ///< HS_{∇h}(∇²h)
    double residual = 0.0;   ///< the sum of the four terms
};

/// Requires −h temporal near x; throws NotTemporal otherwise.
BochnerTerms bochner_residual(const ModelSpec& m, Expr h, const Vec& x);

struct WylieReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;  ///< rhs − lhs
    double ric0 = 0.0;   ///< Ric_0(∇h)
    double weight = 0.0;
    bool lapse_constant = false;     ///< d[F(∇h)²] = 0 at x
    double conformal_defect = 0.0;   ///< ‖∇²h − (trace/n) id‖
    bool equality_expected = false;  ///< constant lapse, Ric_0 = 0 and ∇²h ∝ id
    bool equality_observed = false;  ///< |slack| ≤ 1e-8
};

/// Throws InapplicableCurvature when Ric_0(∇h) < 0.
WylieReport wylie_check(const ModelSpec& m, Expr h, const Vec& x);

}  // namespace lfg
