/// @file weighted.cpp
/// @brief ψ derivatives, Ric_N, c(N, ε), comparison quadratures, Bochner terms and the Wylie inequality.
#include "lfg/weighted.hpp"

#include <cmath>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "lfg/detail/pointwise.hpp"
#include "lfg/duality.hpp"
#include "lfg/errors.hpp"

namespace lfg {

// ─── ψ and its derivatives ────────────────────────────────────────────────────

double psi_value(const ModelSpec& m, const Vec& x, const Vec& v) {
    const MetricAt g = fundamental_tensor(m, x, v);
    if (g.det_g >= 0.0) throw SignatureError("fundamental tensor determinant is not negative");
    return 0.5 * std::log(-g.det_g) - std::log(m.weight_at(span_of(x)));
}

WeightAt psi_and_derivatives(const ModelSpec& m, const Vec& x, const Vec& v) {
    if (!m.in_domain(span_of(x), span_of(v))) throw DomainError("(x, v) outside the domain of model '" + m.name() + "'");
    const detail::PsiAlong p = detail::psi_along(m.tapes(), span_of(x), span_of(v));
    return {x, v, p.psi, p.dpsi, p.ddpsi};
}

WeightAt psi_along_trajectory(const ModelSpec& m, const Vec& x, const Vec& v) {
    const double F = finsler_norm(m, x, v);
    const double h = 1e-3 / F;
    OdeOptions opt;
    opt.abs_tol = opt.rel_tol = 1e-14;
    const GeodesicPath p = integrate_geodesic(m, x, v, -2 * h, 2 * h, opt);
    double f[5];
    for (int k = 0; k < 5; ++k) {
        const double t = (k - 2) * h;
        f[k] = psi_value(m, p.position(t), p.velocity(t));
    }
    WeightAt w;
    w.x = x;
    w.v = v;
    w.psi = f[2];
    w.dpsi = (f[0] - 8 * f[1] + 8 * f[3] - f[4]) / (12 * h);
    w.ddpsi = (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * h * h);
    return w;
}

// ─── Weighted Ricci curvature ─────────────────────────────────────────────────

double weighted_ricci(const ModelSpec& m, const Vec& x, const Vec& v, double N) {
    if (v.isZero(0.0)) return 0.0;
    const WeightAt w = psi_and_derivatives(m, x, v);
    const double ric_inf = curvature_and_ricci(m, x, v).ricci + w.ddpsi;
    if (std::isinf(N)) return ric_inf;
    const int n = m.n();
    if (N == n) return std::abs(w.dpsi) <= 1e-12 * (1.0 + v.norm()) ? ric_inf : -kInfinity;
    return ric_inf - w.dpsi * w.dpsi / (N - n);
}

// ─── ε-range ──────────────────────────────────────────────────────────────────

EpsilonSpec epsilon_constant(int n, double N, double epsilon) {
    auto fail = [&](const std::string& why) {
        std::ostringstream os;
        os << "(N, epsilon) = (" << N << ", " << epsilon << ") with n = " << n << ": " << why;
        throw OutOfEpsilonRange(os.str());
    };
    if (n < 2) fail("dimension must be at least 2");
    if (std::isnan(N) || std::isnan(epsilon)) fail("N and epsilon must be numbers");
    if (N > 1.0 && N < n) fail("N must lie in (-inf, 1] or [n, inf]");
    EpsilonSpec s{n, N, epsilon, 0.0};
    if (std::isinf(N)) {
        if (N < 0) fail("N = -inf is not admissible");
        if (!(std::abs(epsilon) < 1.0)) fail("|epsilon| < 1 is required for N = inf");
        s.c = (1.0 - epsilon * epsilon) / n;
    } else if (N == 1.0) {
        if (epsilon != 0.0) fail("epsilon must be 0 when N = 1");
        s.c = 1.0 / n;
    } else if (N == n) {
        s.c = 1.0 / n;
    } else {
        const double bound = std::sqrt((N - 1.0) / (N - n));
        if (!(std::abs(epsilon) < bound)) fail("|epsilon| < sqrt((N-1)/(N-n)) = " + std::to_string(bound) + " is violated");
        s.c = (1.0 - epsilon * epsilon * (N - n) / (N - 1.0)) / n;
    }
    return s;
}

// ─── Comparison ───────────────────────────────────────────────────────────────

namespace {

void require_unit_speed(const GeodesicPath& geod) {
    const auto& s0 = geod.samples().front();
    const double L = geod.model().lagrangian_at(span_of(s0.x), span_of(s0.v));
    if (!(L < 0.0) || std::abs(std::sqrt(-2.0 * L) - 1.0) > 1e-8)
        throw NotUnitSpeed("geodesic is not unit speed: F = " + std::to_string(L < 0.0 ? std::sqrt(-2.0 * L) : 0.0));
}

double weight_factor(const GeodesicPath& geod, double s, double a) {
    return std::exp(a * psi_value(geod.model(), geod.position(s), geod.velocity(s)));
}

double integrate(const GeodesicPath& geod, double lo, double hi, double a) {
    auto f = [&](double s) { return weight_factor(geod, s, a); };
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lo, hi, 12, 1e-9);
}

}  // namespace

double comparison_bound(const GeodesicPath& geod, double t, const EpsilonSpec& spec, bool reverse) {
    require_unit_speed(geod);
    if (!(t > 0.0)) throw Error("comparison bound needs t > 0");
    const double a = 2.0 * (spec.epsilon - 1.0) / (spec.n - 1);
    const double num = weight_factor(geod, reverse ? -t : t, a);
    const double den = reverse ? integrate(geod, -t, 0.0, a) : integrate(geod, 0.0, t, a);
    return num / (spec.c * den);
}

double completeness_integrand(const GeodesicPath& geod, double T, const EpsilonSpec& spec) {
    require_unit_speed(geod);
    const double a = 2.0 * (spec.epsilon - 1.0) / (spec.n - 1);
    return integrate(geod, 0.0, T, a);
}

// ─── Bochner identity and the Wylie inequality ────────────────────────────────

BochnerTerms bochner_residual(const ModelSpec& m, Expr h, const Vec& x) {
    const FieldAnalysis a = analyze_field(m, differential_of(h, m.n(), 1.0), x);
    BochnerTerms b;
    b.base = x;
    b.term_div = a.term_div;
    b.term_dbox = a.term_dbox;
    b.term_ric = a.term_ric;
    b.term_hs = a.term_hs;
    b.residual = a.term_div + a.term_dbox + a.term_ric + a.term_hs;
    return b;
}

WylieReport wylie_check(const ModelSpec& m, Expr h, const Vec& x) {
    const int n = m.n();
    const FieldAnalysis a = analyze_field(m, differential_of(h, n, 1.0), x);
    WylieReport r;
    r.ric0 = a.term_ric + a.dpsi * a.dpsi / n;
    if (r.ric0 < -1e-12 * (1.0 + std::abs(a.term_ric)))
        throw InapplicableCurvature("Ric_0(grad h) = " + std::to_string(r.ric0) + " < 0 at the sampled direction");
    const double w = std::exp(2.0 * a.psi / n);
    r.weight = w;
    const double box = a.box_m_div;
    r.lhs = w * a.term_div + w * a.term_dbox + 2.0 * w * a.dpsi * box / n + w * box * box / n;
    const Mat E = orthonormal_frame(a.g, a.V);
    double sum = 0.0;
    for (int k = 1; k < n; ++k) {
        const double dF2 = 2.0 * a.du.dot(E.col(k));
        sum += dF2 * dF2;
    }
    r.rhs = w / (2.0 * a.F * a.F) * sum;
    r.slack = r.rhs - r.lhs;
    r.lapse_constant = a.du.norm() <= 1e-12;
    r.conformal_defect = (a.H - a.H.trace() / n * Mat::Identity(n, n)).norm();
    r.equality_expected = r.lapse_constant && std::abs(r.ric0) <= 1e-10 && r.conformal_defect <= 1e-10;
    r.equality_observed = std::abs(r.slack) <= 1e-8;
    return r;
}

}  // namespace lfg
