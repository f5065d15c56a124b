/// @file test_weighted.cpp
/// @brief ψ derivatives, weighted Ricci curvature, ε-range, comparison bound, Bochner and Wylie checks.
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "lfg/duality.hpp"
#include "lfg/errors.hpp"
#include "lfg/model.hpp"
#include "lfg/sampling.hpp"
#include "lfg/weighted.hpp"

using namespace lfg;

namespace {

ModelSpec load(const std::string& name) { return load_model_file(std::string(LFG_MODELS_DIR) + "/" + name + ".model").model; }

const std::vector<std::string> kZoo{"minkowski2", "minkowski4", "warped2",  "warped3",         "randers2",
                                    "perturbed2", "product2",   "weighted_minkowski2", "weighted_warped2"};

Vec V(std::initializer_list<double> l) {
    Vec v(static_cast<Eigen::Index>(l.size()));
    int i = 0;
    for (double d : l) v[i++] = d;
    return v;
}

ModelSpec gaussian_weight() {
    return parse_model_text(
               "[model]\nname = gaussian2\nn = 2\nlagrangian = (-v1^2 + v2^2)/2\nweight = exp(-x1^2/2)\n"
               "orientation = 1, 0\n")
        .model;
}

// ─── Finite-difference oracle for the first two Bochner terms ────────────────

constexpr double kStep = 1e-3;

template <class F>
auto stencil(F&& f, double h) {
    return (f(-2 * h) - 8.0 * f(-h) + 8.0 * f(h) - f(2 * h)) / (12 * h);
}

/// ∇h = ℒ*(dh) through the gradient operator applied to −h.
Vec grad_h(const ModelSpec& m, Expr h, const Vec& x) { return gradient(m, -h, x).grad; }

double log_sigma_partial(const ModelSpec& m, const Vec& x, int i) {
    return stencil(
        [&](double s) {
            Vec y = x;
            y[i] += s;
            return std::log(m.weight_at(span_of(y)));
        },
        kStep);
}

/// div_m Z = Σ ∂_i Z^i + Z·∂ log σ with every derivative by stencil.
template <class Field>
double div_m(const ModelSpec& m, Field&& Z, const Vec& x, double h) {
    const Vec z0 = Z(x);
    double d = 0.0;
    for (int i = 0; i < m.n(); ++i) {
        d += stencil(
            [&](double s) {
                Vec y = x;
                y[i] += s;
                return Z(y)[i];
            },
            h);
        d += z0[i] * log_sigma_partial(m, x, i);
    }
    return d;
}

/// g_V⁻¹ d[F(V)²/2] with V = ∇h and the differential by stencil.
Vec lapse_gradient(const ModelSpec& m, Expr h, const Vec& x) {
    const int n = m.n();
    auto u = [&](const Vec& y) {
        const Vec v = grad_h(m, h, y);
        return -m.lagrangian_at(span_of(y), span_of(v));
    };
    Vec du(n);
    for (int i = 0; i < n; ++i)
        du[i] = stencil(
            [&](double s) {
                Vec y = x;
                y[i] += s;
                return u(y);
            },
            kStep);
    return fundamental_tensor(m, x, grad_h(m, h, x)).g_inv * du;
}

struct FdTerms {
    double term_div, term_dbox;
};

FdTerms fd_bochner(const ModelSpec& m, Expr h, const Vec& x) {
    FdTerms t{};
    t.term_div = div_m(m, [&](const Vec& y) { return lapse_gradient(m, h, y); }, x, kStep);
    const Vec v = grad_h(m, h, x);
    t.term_dbox = stencil(
        [&](double s) {
            const Vec y = x + s * v;
            return div_m(m, [&](const Vec& z) { return grad_h(m, h, z); }, y, kStep);
        },
        kStep);
    return t;
}

}  // namespace

// ─── ψ and its derivatives ────────────────────────────────────────────────────

TEST_CASE("psi: closed-form examples") {
    const WeightAt a = psi_and_derivatives(load("minkowski2"), V({0.3, -0.2}), V({1.2, 0.4}));
    CHECK(std::abs(a.psi) <= 1e-15);
    CHECK(std::abs(a.dpsi) <= 1e-15);
    CHECK(std::abs(a.ddpsi) <= 1e-15);

    const WeightAt b = psi_and_derivatives(load("weighted_minkowski2"), V({0, 0}), V({1, 0}));
    CHECK(std::abs(b.psi) <= 1e-15);
    CHECK(std::abs(b.dpsi - 1.0) <= 1e-12);
    CHECK(std::abs(b.ddpsi) <= 1e-12);

    const WeightAt c = psi_and_derivatives(gaussian_weight(), V({0, 0}), V({1, 0}));
    CHECK(std::abs(c.dpsi) <= 1e-12);
    CHECK(std::abs(c.ddpsi - 1.0) <= 1e-12);

    const WeightAt s = psi_along_trajectory(gaussian_weight(), V({0, 0}), V({1, 0}));
    CHECK(std::abs(s.dpsi) <= 1e-8);
    CHECK(std::abs(s.ddpsi - 1.0) <= 1e-6);
}

TEST_CASE("psi: jet route agrees with the trajectory stencil across the zoo") {
    Rng rng(101);
    for (const auto& name : kZoo) {
        const ModelSpec m = load(name);
        CAPTURE(name);
        for (int k = 0; k < 6; ++k) {
            const Vec x = sample_point(m, rng, 0.5);
            const Vec v = sample_future_timelike(m, x, rng, 0.4);
            const WeightAt j = psi_and_derivatives(m, x, v);
            const WeightAt s = psi_along_trajectory(m, x, v);
            CHECK(std::abs(j.psi - s.psi) <= 1e-12 * (1 + std::abs(j.psi)));
            CHECK(std::abs(j.dpsi - s.dpsi) <= 1e-7 * (1 + std::abs(j.dpsi)));
            CHECK(std::abs(j.ddpsi - s.ddpsi) <= 1e-5 * (1 + std::abs(j.ddpsi)));
        }
    }
}

TEST_CASE("psi: domain precondition") {
    CHECK_THROWS_AS(psi_and_derivatives(load("randers2"), V({0, 0}), V({0, 1})), DomainError);
}

// ─── Weighted Ricci curvature ─────────────────────────────────────────────────

TEST_CASE("weighted Ricci: examples") {
    const ModelSpec flat = load("minkowski2");
    for (double N : {-2.0, 1.0, 2.0, 3.0, kInfinity}) CHECK(std::abs(weighted_ricci(flat, V({0, 0}), V({1, 0.3}), N)) <= 1e-14);
    const ModelSpec w = load("weighted_minkowski2");
    CHECK(std::abs(weighted_ricci(w, V({0, 0}), V({1, 0}), kInfinity)) <= 1e-12);
    CHECK(std::abs(weighted_ricci(w, V({0, 0}), V({1, 0}), -2.0) - 0.25) <= 1e-8);
    CHECK(weighted_ricci(w, V({0, 0}), V({1, 0}), 2.0) == -kInfinity);
    CHECK(weighted_ricci(w, V({0, 0}), V({0, 0}), 3.0) == 0.0);
}

TEST_CASE("weighted Ricci: monotone in N") {
    Rng rng(7);
    for (const auto& name : kZoo) {
        const ModelSpec m = load(name);
        const int n = m.n();
        CAPTURE(name);
        for (int k = 0; k < 10; ++k) {
            const Vec x = sample_point(m, rng, 0.5);
            const Vec v = sample_future_timelike(m, x, rng);
            const double N = uniform(rng, n + 0.01, 50.0);
            const double Np = uniform(rng, -20.0, n - 0.01);
            const double rn = weighted_ricci(m, x, v, n);
            const double rN = weighted_ricci(m, x, v, N);
            const double ri = weighted_ricci(m, x, v, kInfinity);
            const double rNp = weighted_ricci(m, x, v, Np);
            CHECK(rn <= rN + 1e-10);
            CHECK(rN <= ri + 1e-10);
            CHECK(ri <= rNp + 1e-10);
        }
    }
}

TEST_CASE("weighted Ricci: reverse model at -v") {
    Rng rng(8);
    for (const auto& name : kZoo) {
        const ModelSpec m = load(name);
        const ModelSpec r = reverse_model(m);
        CAPTURE(name);
        for (int k = 0; k < 6; ++k) {
            const Vec x = sample_point(m, rng, 0.5);
            const Vec v = sample_future_timelike(m, x, rng);
            for (double N : {-1.0, m.n() + 1.5, kInfinity}) {
                const double a = weighted_ricci(m, x, v, N);
                const double b = weighted_ricci(r, x, Vec(-v), N);
                CHECK(std::abs(a - b) <= 1e-8 * (1 + std::abs(a)));
            }
        }
    }
}

// ─── ε-range ──────────────────────────────────────────────────────────────────

TEST_CASE("epsilon constant: examples and rejections") {
    CHECK(epsilon_constant(2, 2.0, 1.0).c == doctest::Approx(0.5));
    CHECK(epsilon_constant(2, kInfinity, 0.0).c == doctest::Approx(0.5));
    CHECK(epsilon_constant(3, 1.0, 0.0).c == doctest::Approx(1.0 / 3.0));
    CHECK(epsilon_constant(2, 4.0, 0.5).c == doctest::Approx(0.5 * (1 - 0.25 * 2.0 / 3.0)));
    CHECK_THROWS_AS(epsilon_constant(2, 1.0, 0.1), OutOfEpsilonRange);
    CHECK_THROWS_AS(epsilon_constant(3, 2.0, 0.0), OutOfEpsilonRange);
    CHECK_THROWS_AS(epsilon_constant(2, kInfinity, 1.0), OutOfEpsilonRange);
    CHECK_THROWS_AS(epsilon_constant(2, 4.0, std::sqrt(1.5)), OutOfEpsilonRange);
    try {
        epsilon_constant(2, 1.0, 0.1);
    } catch (const OutOfEpsilonRange& e) {
        CHECK(std::string(e.what()).find("N = 1") != std::string::npos);
    }
}

TEST_CASE("epsilon constant: positive on admissible pairs") {
    Rng rng(5);
    int tried = 0;
    for (int k = 0; k < 2000; ++k) {
        const int n = 2 + static_cast<int>(uniform(rng, 0.0, 3.0));
        const int kind = static_cast<int>(uniform(rng, 0.0, 5.0));
        double N = 0.0, bound = 0.0;
        switch (kind) {
            case 0: N = kInfinity; bound = 1.0; break;
            case 1: N = 1.0; bound = 0.0; break;
            case 2: N = n; bound = 10.0; break;
            case 3: N = uniform(rng, -50.0, 1.0); bound = std::sqrt((N - 1) / (N - n)); break;
            default: N = uniform(rng, n + 1e-3, 100.0); bound = std::sqrt((N - 1) / (N - n)); break;
        }
        const double eps = bound * uniform(rng, -0.999, 0.999);
        const EpsilonSpec s = epsilon_constant(n, N, eps);
        CAPTURE(n);
        CAPTURE(N);
        CAPTURE(eps);
        CHECK(s.c > 0.0);
        ++tried;
    }
    CHECK(tried == 2000);
}

// ─── Comparison bound ─────────────────────────────────────────────────────────

TEST_CASE("comparison bound: flat unweighted") {
    const ModelSpec m = load("minkowski2");
    const GeodesicPath p = integrate_geodesic(m, V({0, 0}), V({1, 0}), -5.0, 5.0);
    const EpsilonSpec s = epsilon_constant(2, 2.0, 1.0);
    for (double t : {0.5, 1.0, 2.0, 5.0}) {
        CHECK(std::abs(comparison_bound(p, t, s) - 2.0 / t) <= 1e-9);
        CHECK(std::abs(comparison_bound(p, t, s, true) - 2.0 / t) <= 1e-9);
    }
    // □_m(−τ) at (1, 0) is (n − 1)/t = 1.
    const OperatorAt op = hessian_and_dalembertian(m, parse("sqrt(x1^2 - x2^2)"), V({1, 0}), -2.0);
    CHECK(std::abs(op.box_m - 1.0) <= 1e-10);
    CHECK(op.box_m <= comparison_bound(p, 1.0, s));
    CHECK_THROWS_AS(comparison_bound(integrate_geodesic(m, V({0, 0}), V({2, 0}), 0.0, 1.0), 0.5, s), NotUnitSpeed);
}

TEST_CASE("comparison bound: exponential weight against the hand integral") {
    const ModelSpec m = load("weighted_minkowski2");
    const GeodesicPath p = integrate_geodesic(m, V({0, 0}), V({1, 0}), -3.0, 5.0);
    const EpsilonSpec s = epsilon_constant(2, kInfinity, 0.0);
    for (double t : {0.25, 1.0, 2.0, 5.0}) {
        const double fwd = std::exp(-2 * t) / (s.c * (1 - std::exp(-2 * t)) / 2);
        CHECK(std::abs(comparison_bound(p, t, s) - fwd) <= 1e-8 * fwd);
        if (t <= 3.0) {
            const double rev = std::exp(2 * t) / (s.c * (std::exp(2 * t) - 1) / 2);
            CHECK(std::abs(comparison_bound(p, t, s, true) - rev) <= 1e-8 * rev);
        }
    }
}

TEST_CASE("completeness integrand") {
    const ModelSpec w = load("weighted_minkowski2");
    const GeodesicPath p = integrate_geodesic(w, V({0, 0}), V({1, 0}), 0.0, 8.0);
    for (double T : {1.0, 4.0, 8.0}) {
        CHECK(std::abs(completeness_integrand(p, T, epsilon_constant(2, kInfinity, 0.0)) - (1 - std::exp(-2 * T)) / 2) <= 1e-9);
        CHECK(std::abs(completeness_integrand(p, T, epsilon_constant(2, 2.0, 1.0)) - T) <= 1e-9 * T);
    }
    const GeodesicPath q = integrate_geodesic(load("minkowski2"), V({0, 0}), V({1, 0}), 0.0, 3.0);
    CHECK(std::abs(completeness_integrand(q, 3.0, epsilon_constant(2, 5.0, 0.3)) - 3.0) <= 1e-9);
}

// ─── Bochner identity ─────────────────────────────────────────────────────────

TEST_CASE("Bochner: examples") {
    const ModelSpec m = load("minkowski2");
    const BochnerTerms a = bochner_residual(m, parse("-x1"), V({0.2, 0.4}));
    CHECK(std::abs(a.term_div) + std::abs(a.term_dbox) + std::abs(a.term_ric) + std::abs(a.term_hs) <= 1e-14);

    const Expr h = parse("-x1 - 0.05*x2^2");
    const Vec x = V({0, 0.1});
    const BochnerTerms b = bochner_residual(m, h, x);
    CHECK(std::abs(b.residual) <= 1e-6);
    CHECK(std::abs(b.term_div) > 1e-4);
    CHECK(std::abs(b.term_hs) > 1e-4);
    const FdTerms fd = fd_bochner(m, h, x);
    CHECK(std::abs(fd.term_div - b.term_div) <= 1e-4 * std::max(1.0, std::abs(b.term_div)));
    CHECK(std::abs(fd.term_dbox - b.term_dbox) <= 1e-4 * std::max(1.0, std::abs(b.term_dbox)));

    CHECK_THROWS_AS(bochner_residual(m, parse("-x2"), V({0, 0})), NotTemporal);
}

TEST_CASE("Bochner: weighted warped batch with finite-difference oracle") {
    const ModelSpec m = load("weighted_warped2");
    Rng rng(31);
    int done = 0;
    double worst = 0.0;
    for (int k = 0; k < 140 && done < 100; ++k) {
        const Vec x = sample_point(m, rng, 0.8);
        const Expr h = -random_temporal_function(m, x, rng, 0.1);
        BochnerTerms b;
        try {
            b = bochner_residual(m, h, x);
        } catch (const NotTemporal&) {
            continue;
        }
        worst = std::max(worst, std::abs(b.residual));
        if (done % 10 == 0) {
            const FdTerms fd = fd_bochner(m, h, x);
            CHECK(std::abs(fd.term_div - b.term_div) <= 1e-4 * std::max(1.0, std::abs(b.term_div)));
            CHECK(std::abs(fd.term_dbox - b.term_dbox) <= 1e-4 * std::max(1.0, std::abs(b.term_dbox)));
        }
        ++done;
    }
    CHECK(done == 100);
    CHECK(worst <= 1e-6);
}

TEST_CASE("Bochner: residual over the zoo") {
    Rng rng(32);
    for (const auto& name : kZoo) {
        const ModelSpec m = load(name);
        CAPTURE(name);
        int done = 0;
        for (int k = 0; k < 30 && done < 12; ++k) {
            const Vec x = sample_point(m, rng, 0.6);
            const Expr h = -random_temporal_function(m, x, rng, 0.1);
            try {
                CHECK(std::abs(bochner_residual(m, h, x).residual) <= 1e-6);
                ++done;
            } catch (const NotTemporal&) {
            } catch (const DomainError&) {
            }
        }
        CHECK(done >= 10);
    }
}

// ─── Wylie inequality ─────────────────────────────────────────────────────────

TEST_CASE("Wylie: examples") {
    const WylieReport a = wylie_check(load("minkowski2"), parse("-x1"), V({0, 0}));
    CHECK(std::abs(a.lhs) <= 1e-14);
    CHECK(std::abs(a.rhs) <= 1e-14);
    CHECK(a.lapse_constant);
    CHECK(a.equality_expected);
    CHECK(a.equality_observed);

    const WylieReport b = wylie_check(load("weighted_minkowski2"), parse("-x1"), V({0, 0}));
    // ψ′ = 1, □_m h = −1, w = 1: lhs = 2·1·(−1)/2 + 1/2.
    CHECK(std::abs(b.lhs + 0.5) <= 1e-12);
    CHECK(std::abs(b.rhs) <= 1e-12);
    CHECK(b.slack >= 0.0);
    CHECK(std::abs(b.ric0 - 0.5) <= 1e-12);
    CHECK_FALSE(b.equality_expected);
}

TEST_CASE("Wylie: perturbed temporal functions in the flat weighted model") {
    const ModelSpec m = load("weighted_minkowski2");
    Rng rng(41);
    int done = 0;
    for (int k = 0; k < 80 && done < 50; ++k) {
        const Vec x = sample_point(m, rng, 0.8);
        const Expr h = -random_temporal_function(m, x, rng, 0.1);
        try {
            const WylieReport r = wylie_check(m, h, x);
            CHECK(r.slack >= -1e-8);
            if (r.equality_expected) CHECK(r.equality_observed);
            ++done;
        } catch (const NotTemporal&) {
        }
    }
    CHECK(done == 50);
}

TEST_CASE("Wylie: negative Ric_0 is reported") {
    // σ = e^{x1²} gives ψ = −x1², so ψ″ = −2 along (1, 0) and Ric_0 = −2 at x1 = 0.
    const ModelSpec m = parse_model_text(
                            "[model]\nn = 2\nlagrangian = (-v1^2 + v2^2)/2\nweight = exp(x1^2)\norientation = 1, 0\n")
                            .model;
    CHECK_THROWS_AS(wylie_check(m, parse("-x1"), V({0, 0})), InapplicableCurvature);
}
