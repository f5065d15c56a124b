/// @file test_busemann.cpp
/// @brief Straight lines, Busemann functions, asymptotes, field analysis and the splitting checks.
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "doctest.h"
#include "lfg/busemann.hpp"
#include "lfg/errors.hpp"
#include "lfg/model.hpp"
#include "lfg/sampling.hpp"

using namespace lfg;

namespace {

ModelSpec load(const std::string& name) { return load_model_file(std::string(LFG_MODELS_DIR) + "/" + name + ".model").model; }

Vec V(std::initializer_list<double> l) {
    Vec v(static_cast<Eigen::Index>(l.size()));
    int i = 0;
    for (double d : l) v[i++] = d;
    return v;
}

const LineSpec& minkowski_line() {
    static const LineSpec l = validate_line(load("minkowski2"), V({0, 0}), V({1, 0}), 100.0);
    return l;
}

const LineSpec& product_line() {
    static const LineSpec l = validate_line(load("product2"), V({0, 0}), V({1, 0}), 64.0);
    return l;
}

const LineSpec& randers_line() {
    static const LineSpec l = validate_line(load("randers2"), V({0, 0}), V({0.8, 0}), 64.0);
    return l;
}

/// Randers oracle: F(w) = √(w₁² − w₂²) + w₁/4 on the cone, so t − F(t e − x) → 5x₁/4 for e = (0.8, 0).
double randers_b(const Vec& x) {
    const double t = 1e6;
    const double w1 = 0.8 * t - x[0], w2 = -x[1];
    const double F = std::sqrt((w1 - w2) * (w1 + w2)) + 0.25 * w1;
    return t - F;
}

}  // namespace

// ─── Straight lines ───────────────────────────────────────────────────────────

TEST_CASE("line validation") {
    CHECK(minkowski_line().max_defect <= 1e-9);
    CHECK(minkowski_line().closed_form);
    CHECK(product_line().max_defect <= 1e-6);
    CHECK(product_line().closed_form);
    CHECK(randers_line().max_defect <= 1e-9);
    CHECK_THROWS_AS(validate_line(load("minkowski2"), V({0, 0}), V({2, 0}), 10.0), PreconditionFailure);
    CHECK_THROWS_AS(validate_line(load("minkowski2"), V({0, 0}), V({-1, 0}), 10.0), PreconditionFailure);
    // A product line with Σ motion is integrated, not closed form, and still straight.
    const ModelSpec p = load("product2");
    const Vec v = V({1.25, 0.75});
    const LineSpec moving = validate_line(p, V({0, 0}), v / std::sqrt(-2 * p.lagrangian_at(span_of(V({0, 0})), span_of(v))), 4.0, 5);
    CHECK_FALSE(moving.closed_form);
    CHECK(moving.max_defect <= 1e-6);
    CHECK_THROWS_AS(moving.point(5.0), PreconditionFailure);
}

// ─── Busemann functions ───────────────────────────────────────────────────────

TEST_CASE("Busemann partials: flat examples") {
    const LineSpec& l = minkowski_line();
    CHECK(std::abs(busemann_partial(l, V({0, 0.5}), 10.0) - (10.0 - std::sqrt(100.0 - 0.25))) <= 1e-9);
    CHECK(std::abs(busemann_partial(l, V({1, 0}), 7.0) - 1.0) <= 1e-9);
    CHECK(std::isfinite(busemann_partial(l, V({0, 2}), 10.0)));
    CHECK(busemann_partial(l, V({0, 2}), 1.0) == std::numeric_limits<double>::infinity());
}

TEST_CASE("Busemann limit: Minkowski on a 41x41 grid") {
    const LineSpec& l = minkowski_line();
    const Grid g = box_grid(V({0, 0}), 2.0, 41);
    double err = 0.0, mono = 0.0, lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Vec x = g.point(i);
        const BusemannValue v = busemann_limit(l, x);
        err = std::max({err, std::abs(v.b - x[0]), std::abs(v.b_rev + x[0])});
        mono = std::max(mono, v.monotone_violation);
        lo = std::min(lo, v.b + v.b_rev);
        hi = std::max(hi, v.b + v.b_rev);
    }
    CHECK(err <= 1e-6);
    CHECK(mono <= 1e-9);
    CHECK(lo >= -1e-8);
    CHECK(hi <= 1e-6);
}

TEST_CASE("Busemann limit: product model gives b = t") {
    const LineSpec& l = product_line();
    const Grid g = box_grid(V({0, 0}), 1.0, 21);
    double err = 0.0, mono = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Vec x = g.point(i);
        const BusemannValue v = busemann_limit(l, x);
        err = std::max(err, std::abs(v.b - x[0]));
        mono = std::max(mono, v.monotone_violation);
    }
    CHECK(err <= 1e-6);
    CHECK(mono <= 1e-9);
}

TEST_CASE("Busemann limit: zero sum on the line and the flat Randers oracle") {
    for (const LineSpec* l : {&minkowski_line(), &product_line(), &randers_line()})
        for (double s : {-1.0, 0.0, 1.0}) {
            const BusemannValue v = busemann_limit(*l, l->point(s));
            CHECK(std::abs(v.b - s) <= 1e-8);
            CHECK(std::abs(v.b + v.b_rev) <= 1e-8);
        }
    Rng rng(3);
    for (int k = 0; k < 20; ++k) {
        const Vec x = V({uniform(rng, -1, 1), uniform(rng, -1, 1)});
        const double b = busemann_limit(randers_line(), x).b;
        CHECK(std::abs(b - randers_b(x)) <= 1e-6);
        CHECK(std::abs(b - 1.25 * x[0]) <= 1e-6);
    }
}

// ─── Asymptotes ───────────────────────────────────────────────────────────────

TEST_CASE("asymptotes: flat and product") {
    std::vector<double> horizons;
    for (int k = 0; k < 14; ++k) horizons.push_back(8.0 * std::ldexp(1.0, k));
    const Asymptote a = asymptote_from(minkowski_line(), V({0, 0.5}), horizons);
    CHECK((a.velocity - V({1, 0})).norm() <= 1e-6);
    // Connecting directions tilt towards the line direction as the horizon grows.
    CHECK(std::abs(a.velocities.front()[1]) > std::abs(a.velocities.back()[1]));

    const Asymptote on = asymptote_from(minkowski_line(), V({1, 0}), horizons);
    CHECK((on.velocity - V({1, 0})).norm() <= 1e-9);
    CHECK((on.path.position(1.5) - V({2.5, 0})).norm() <= 1e-9);

    for (const LineSpec* l : {&minkowski_line(), &product_line(), &randers_line()}) {
        const Vec x = V({0.1, 0.3});
        const Asymptote z = asymptote_from(*l, x, horizons);
        const double bx = busemann_limit(*l, x).b;
        for (double t : {0.5, 1.0, 2.0}) CHECK(std::abs(busemann_limit(*l, z.path.position(t)).b - bx - t) <= 1e-6);
        // Upper support: ρ(z) = b(x) + t − τ(z, ζ(t)) ≥ b(z), with equality at x.
        const double t = 2.0;
        const Vec zt = z.path.position(t);
        Rng rng(9);
        for (int k = 0; k < 10; ++k) {
            const Vec q = x + 0.1 * V({uniform(rng, -1, 1), uniform(rng, -1, 1)});
            const double rho = bx + t - time_separation(l->model, q, zt).tau;
            CHECK(rho - busemann_limit(*l, q).b >= -1e-6);
        }
        CHECK(std::abs(bx + t - time_separation(l->model, x, zt).tau - bx) <= 1e-6);
    }
}

TEST_CASE("asymptote agrees with the Busemann gradient") {
    const BusemannField f = busemann_field(randers_line(), tube_grid(V({0, 0}), 0.3, 0.3, 0.05));
    std::vector<double> horizons;
    for (int k = 0; k < 14; ++k) horizons.push_back(8.0 * std::ldexp(1.0, k));
    const Vec x = V({0.05, 0.1});
    const Asymptote a = asymptote_from(randers_line(), x, horizons);
    const FieldAnalysis fa = analyze_field(f.line.model, f.b.covector(-1.0), x);
    CHECK((a.velocity - fa.V).norm() <= 1e-6);
    CHECK((a.velocity - V({0.8, 0})).norm() <= 1e-6);
}

// ─── Field analysis ───────────────────────────────────────────────────────────

TEST_CASE("field analysis: Minkowski, product and Randers") {
    {
        const BusemannField f = busemann_field(minkowski_line(), tube_grid(V({0, 0}), 1.0, 0.5, 0.05));
        const FieldReport r = field_analysis(f, -2.0);
        CHECK(r.points.size() > 500);
        double grad = 0.0;
        for (const auto& p : r.points) grad = std::max(grad, (p.grad - V({1, 0})).norm());
        CHECK(grad <= 1e-5);
        CHECK(r.max_lapse_defect <= 1e-5);
        CHECK(r.max_hessian <= 1e-5);
        CHECK(r.max_p_harmonic <= 1e-5);
    }
    {
        const BusemannField f = busemann_field(product_line(), tube_grid(V({0, 0}), 0.5, 0.5, 0.05));
        const FieldReport r = field_analysis(f, -2.0);
        double grad = 0.0;
        for (const auto& p : r.points) grad = std::max(grad, (p.grad - V({1, 0})).norm());
        CHECK(grad <= 1e-5);
        CHECK(r.max_lapse_defect <= 1e-5);
        CHECK(r.max_hessian <= 1e-5);
        CHECK(r.max_p_harmonic <= 1e-5);
    }
    {
        const BusemannField f = busemann_field(randers_line(), tube_grid(V({0, 0}), 0.5, 0.3, 0.05));
        const FieldReport r = field_analysis(f, -1.0);
        CHECK(r.max_lapse_defect <= 1e-4);
        CHECK(r.max_hessian <= 1e-4);
    }
    const BusemannField coarse = busemann_field(minkowski_line(), box_grid(V({0, 0}), 0.5, 8));
    CHECK_THROWS_AS(field_analysis(coarse, -2.0), GridTooCoarse);
}

// ─── Splitting ────────────────────────────────────────────────────────────────

TEST_CASE("splitting: Minkowski") {
    const SplittingReport r = splitting_suite(minkowski_line());
    for (const auto& c : r.checks) {
        CAPTURE(c.name);
        CAPTURE(c.max_residual);
        CHECK((c.pass || c.skipped));
    }
    CHECK(r.berwald);
    for (const auto& s : r.sigma) CHECK(std::abs(s.h(0, 0) - 1.0) <= 1e-8);
}

TEST_CASE("splitting: product model recovers h") {
    const SplittingReport r = splitting_suite(product_line());
    for (const auto& c : r.checks) {
        CAPTURE(c.name);
        CAPTURE(c.max_residual);
        CHECK(c.pass);
    }
    for (const auto& s : r.sigma) {
        const double y = s.point[1];
        CHECK(std::abs(s.h(0, 0) - (1.0 + 0.5 * std::sin(y) * std::sin(y))) <= 1e-5);
    }
}

TEST_CASE("splitting: flat Randers") {
    const SplittingReport r = splitting_suite(randers_line());
    for (const auto& c : r.checks) {
        CAPTURE(c.name);
        CAPTURE(c.max_residual);
        CHECK((c.pass || c.skipped));
    }
    CHECK(r.check("translation_isometry").samples == 200);
    CHECK(r.check("translation_isometry").max_residual <= 1e-7);
    CHECK(r.check("geodesic_split").max_residual <= 1e-5);
    CHECK(r.sigma_margin > 0.0);
}

TEST_CASE("splitting: Berwald checks are gated") {
    // A field sampled directly on a non-Berwald model: the Berwald checks must be skipped with a reason.
    const ModelSpec m = load("perturbed2");
    LineSpec l;
    l.model = m;
    l.base = V({0, 0});
    l.velocity = V({1, 0});
    l.horizon = 0.5;
    l.unit_speed = true;
    l.eta = integrate_geodesic(m, l.base, l.velocity, -0.5, 0.5);
    BusemannField f;
    f.line = l;
    f.grid = tube_grid(l.base, 0.4, 0.3, 0.05);
    for (std::size_t i = 0; i < f.grid.size(); ++i) {
        f.values.push_back(f.grid.point(i)[0]);
        f.reverse_values.push_back(-f.grid.point(i)[0]);
    }
    f.b = GridInterpolant(f.grid, f.values);
    f.b_rev = GridInterpolant(f.grid, f.reverse_values);
    SplittingOptions opt;
    opt.theta_times = {-0.2, 0.2};
    const SplittingReport r = splitting_suite(f, opt);
    CHECK_FALSE(r.berwald);
    CHECK(r.check("translation_isometry").skipped);
    CHECK(r.check("geodesic_split").skipped);
    CHECK(r.check("translation_isometry").note.find("Berwald") != std::string::npos);
}
