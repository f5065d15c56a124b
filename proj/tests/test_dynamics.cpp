/// @file test_dynamics.cpp
/// @brief Geodesics, parallel transport, Jacobi frames, Riccati residual and time separation.
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "doctest.h"
#include "lfg/duality.hpp"
#include "lfg/dynamics.hpp"
#include "lfg/errors.hpp"
#include "lfg/model.hpp"
#include "lfg/sampling.hpp"

using namespace lfg;

namespace {

ModelSpec load(const std::string& name) { return load_model_file(std::string(LFG_MODELS_DIR) + "/" + name + ".model").model; }

const std::vector<std::string> kZoo{"minkowski2", "minkowski4", "warped2",  "warped3",
                                    "randers2",   "perturbed2", "product2", "weighted_minkowski2"};

Vec V(std::initializer_list<double> l) {
    Vec v(static_cast<Eigen::Index>(l.size()));
    int i = 0;
    for (double d : l) v[i++] = d;
    return v;
}

Vec unit(const ModelSpec& m, const Vec& x, const Vec& v) {
    return v / std::sqrt(-2.0 * m.lagrangian_at(span_of(x), span_of(v)));
}

/// ∫ √(1 + ½ sin² y) dy by composite Simpson on a fine grid.
double product2_fiber(double a, double b) {
    const int N = 20000;
    const double h = (b - a) / N;
    double s = 0.0;
    for (int i = 0; i <= N; ++i) {
        const double y = a + i * h;
        const double w = (i == 0 || i == N) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        s += w * std::sqrt(1.0 + 0.5 * std::sin(y) * std::sin(y));
    }
    return s * h / 3.0;
}

}  // namespace

// ─── Geodesics ────────────────────────────────────────────────────────────────

TEST_CASE("geodesic: Minkowski straight line") {
    const ModelSpec m = load("minkowski2");
    const GeodesicPath p = integrate_geodesic(m, V({0, 0}), V({1, 0}), 0.0, 10.0);
    CHECK(p.unit_speed());
    for (double t : {0.0, 0.3, 2.5, 7.1, 10.0}) {
        const Vec x = p.position(t);
        CHECK(std::abs(x[0] - t) <= 1e-12);
        CHECK(std::abs(x[1]) <= 1e-12);
        CHECK(m.lagrangian_at(span_of(x), span_of(p.velocity(t))) == doctest::Approx(-0.5).epsilon(1e-13));
    }
    CHECK(p.lagrangian_drift() <= 1e-13);
}

TEST_CASE("geodesic: warped model conserves energy and the cyclic momentum") {
    const ModelSpec m = load("warped2");
    const Vec x0 = V({0.1, 0.2});
    const Vec v0 = unit(m, x0, V({1.0, 0.4}));
    const GeodesicPath p = integrate_geodesic(m, x0, v0, -1.0, 5.0);
    CHECK(p.lagrangian_drift() <= 1e-10);
    // The momentum carries a factor e^{2t} ≈ 2·10⁴ at t = 5 on the integration error.
    const double p2 = std::exp(2 * x0[0]) * v0[1];
    for (const auto& s : p.samples()) {
        CHECK(std::abs(std::exp(2 * s.x[0]) * s.v[1] - p2) <= 1e-8);
        // ṫ² = 1 + p₂² e^{−2t} for unit speed.
        CHECK(std::abs(s.v[0] * s.v[0] - 1.0 - p2 * p2 * std::exp(-2 * s.x[0])) <= 1e-9);
    }
    CHECK(p.max_residual() <= 1e-8);
    for (double t : {-0.77, 0.5, 1.37, 4.2}) {
        const Vec x = p.position(t), v = p.velocity(t);
        CHECK(std::abs(std::exp(2 * x[0]) * v[1] - p2) <= 1e-8);
    }
}

TEST_CASE("geodesic: exp map, homogeneity and domain exit") {
    const ModelSpec m = load("warped3");
    const Vec x = V({0.2, -0.1, 0.3}), v = V({1.2, 0.3, -0.2});
    const GeodesicPath p = integrate_geodesic(m, x, v, 0.0, 1.0);
    const Vec e = exp_map(m, x, v);
    CHECK((e - p.samples().back().x).norm() == 0.0);

    const double c = 1.7;
    const GeodesicPath q = integrate_geodesic(m, x, c * v, 0.0, 1.0);
    for (double t : {0.1, 0.35, 0.5}) CHECK((q.position(t) - p.position(c * t)).norm() <= 1e-8);

    const ModelSpec pert = load("perturbed2");
    try {
        integrate_geodesic(pert, V({0, 0}), V({1, 0}), 0.0, 3.0);
        FAIL("expected LeftDomain");
    } catch (const LeftDomain& ex) {
        CHECK(std::abs(ex.t_exit - 1.0) <= 1e-9);
    }
}

TEST_CASE("geodesic: sample residuals across models") {
    Rng rng(3);
    for (const auto& name : kZoo) {
        CAPTURE(name);
        const ModelSpec m = load(name);
        for (int k = 0; k < 3; ++k) {
            const Vec x = sample_point(m, rng, 0.3);
            const Vec v = unit(m, x, sample_future_timelike(m, x, rng, 0.3));
            // Forward only: the warped models are past incomplete.
            const GeodesicPath p = integrate_geodesic(m, x, v, 0.0, 0.5);
            CHECK(p.unit_speed());
            CHECK(p.lagrangian_drift() <= 1e-10);
            CHECK(p.max_residual() <= 1e-8);
        }
    }
}

// ─── Parallel transport ───────────────────────────────────────────────────────

TEST_CASE("parallel transport: flat identity and metric compatibility") {
    {
        const ModelSpec m = load("minkowski2");
        const GeodesicPath p = integrate_geodesic(m, V({0, 0}), V({1, 0.3}), 0.0, 5.0);
        const TransportedField f = parallel_transport(p, V({0.2, 1.0}));
        for (const Vec& w : f.W) CHECK((w - V({0.2, 1.0})).norm() <= 1e-13);
    }
    {
        const ModelSpec m = load("randers2");
        const Vec w0 = V({1.0, 0.5});
        const GeodesicPath p = integrate_geodesic(m, V({0, 0}), V({1, 0.2}), 0.0, 5.0);
        const TransportedField f = parallel_transport(p, w0);
        const double L0 = m.lagrangian_at(span_of(f.x[0]), span_of(w0));
        for (std::size_t i = 0; i < f.t.size(); ++i)
            CHECK(std::abs(m.lagrangian_at(span_of(f.x[i]), span_of(f.W[i])) - L0) <= 1e-9);
    }
    for (const std::string name : {"warped2", "perturbed2", "product2"}) {
        CAPTURE(name);
        const ModelSpec m = load(name);
        const Vec x0 = V({0.1, 0.2});
        const Vec v0 = unit(m, x0, V({1.0, 0.3}));
        const GeodesicPath p = integrate_geodesic(m, x0, v0, 0.0, name == std::string("perturbed2") ? 0.8 : 5.0);
        const Vec w0 = V({0.3, 1.0}), u0 = V({-0.4, 0.7});
        const TransportedField fw = parallel_transport(p, w0);
        const TransportedField fu = parallel_transport(p, u0);
        const Mat g0 = fundamental_tensor(m, x0, v0).g;
        const double ww = w0.dot(g0 * w0), wu = w0.dot(g0 * u0);
        for (std::size_t i = 0; i < fw.t.size(); ++i) {
            const Mat g = fundamental_tensor(m, fw.x[i], fw.velocity[i]).g;
            CHECK(std::abs(fw.W[i].dot(g * fw.W[i]) - ww) <= 1e-9);
            CHECK(std::abs(fw.W[i].dot(g * fu.W[i]) - wu) <= 1e-9);
        }
    }
}

// ─── Jacobi frames ────────────────────────────────────────────────────────────

TEST_CASE("jacobi frame: flat linear function") {
    const ModelSpec m = load("minkowski2");
    const JacobiFrame fr(m, parse("-x1"), V({0, 0}));
    for (const FrameAt& f : fr.at({0.0, 0.5, 1.0})) {
        CHECK((f.E - Mat::Identity(2, 2)).norm() <= 1e-13);
        CHECK(f.B.norm() <= 1e-13);
        CHECK(std::abs(f.A(0, 0) + 1.0) <= 1e-13);
        CHECK(std::abs(f.A(1, 1) - 1.0) <= 1e-13);
        CHECK(std::abs(f.A(0, 1)) <= 1e-13);
    }
    CHECK(riccati_residual(fr, 0.5) <= 1e-12);
}

TEST_CASE("jacobi frame: B(0) is the Hessian in the frame") {
    const ModelSpec m = load("minkowski2");
    const JacobiFrame fr(m, parse("-x1 - 0.05*x2^2"), V({0, 0.1}));
    // ∇h = (1, −0.1 x2) on Minkowski space, so ∇²h = diag(0, −0.1) in coordinates.
    Mat H = Mat::Zero(2, 2);
    H(1, 1) = -0.1;
    const Mat e = fr.initial_frame();
    const Mat B0 = (e.inverse() * H * e).transpose();
    CHECK((fr.at(0.0).B - B0).norm() <= 1e-7);
    for (double t = 0.1; t <= 1.0001; t += 0.1) CHECK(riccati_residual(fr, t) <= 1e-6);
}

TEST_CASE("jacobi frame: Riccati, HS and A-B identities across models") {
    Rng rng(41);
    for (const auto& name : kZoo) {
        CAPTURE(name);
        const ModelSpec m = load(name);
        int geodesics = 0;
        for (int attempt = 0; attempt < 30 && geodesics < 4; ++attempt) {
            const Vec x = sample_point(m, rng, 0.3);
            const Expr h = -random_temporal_function(m, x, rng, 0.1);
            std::vector<double> ts;
            for (int i = 1; i <= 10; ++i) ts.push_back(0.05 * i);
            std::vector<double> res;
            std::optional<JacobiFrame> fr;
            try {
                fr.emplace(m, h, x);
                res = riccati_residuals(*fr, ts);
            } catch (const NotTemporal&) {
                continue;
            } catch (const LeftDomain&) {
                continue;
            }
            ++geodesics;
            for (double r : res) CHECK(r <= 1e-6);
            const FieldAnalysis a = analyze_field(m, differential_of(h, m.n(), 1.0), x);
            const FrameAt f0 = fr->at(0.0);
            CHECK(std::abs((f0.B * f0.B).trace() - a.term_hs) <= 1e-7);
            // A′ = BA + ABᵀ and BA − ABᵀ constant.
            const Mat C0 = f0.B * f0.A - f0.A * f0.B.transpose();
            const double s = 1e-3;
            for (double t : {0.1, 0.3, 0.5}) {
                const auto f = fr->at({t - 2 * s, t - s, t, t + s, t + 2 * s});
                const Mat dA = (f[0].A - 8.0 * f[1].A + 8.0 * f[3].A - f[4].A) / (12.0 * s);
                CHECK((dA - f[2].B * f[2].A - f[2].A * f[2].B.transpose()).norm() <= 1e-6);
                CHECK((f[2].B * f[2].A - f[2].A * f[2].B.transpose() - C0).norm() <= 1e-6);
            }
        }
        CHECK(geodesics == 4);
    }
}

// ─── Connection and time separation ───────────────────────────────────────────

TEST_CASE("connect points: Minkowski") {
    const ModelSpec m = load("minkowski2");
    const Connection c = connect_points(m, V({0, 0}), V({2, 1}));
    REQUIRE(c.connected);
    CHECK(c.length == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
    CHECK((c.velocity - V({2, 1})).norm() <= 1e-10);
    const Connection d = connect_points(m, V({0, 0}), V({0, 1}));
    CHECK_FALSE(d.connected);
    CHECK_FALSE(d.diagnostic.empty());
}

TEST_CASE("connect points: product model against the product formula") {
    const ModelSpec m = load("product2");
    Rng rng(43);
    for (int k = 0; k < 8; ++k) {
        const Vec x = V({uniform(rng, -1, 1), uniform(rng, -1, 1)});
        const double dy = uniform(rng, -0.8, 0.8);
        const double ds = product2_fiber(std::min(x[1], x[1] + dy), std::max(x[1], x[1] + dy));
        const Vec y = x + V({ds + uniform(rng, 0.3, 1.5), dy});
        const double oracle = std::sqrt((y[0] - x[0]) * (y[0] - x[0]) - ds * ds);
        const Connection c = connect_points(m, x, y);
        REQUIRE(c.connected);
        CHECK(std::abs(c.length - oracle) <= 1e-6);
        CHECK(std::abs(time_separation(m, x, y).tau - oracle) <= 1e-9);
        CHECK(std::abs(product_fiber_distance(m, x[1], x[1] + dy) - ds) <= 1e-10);
    }
}

TEST_CASE("time separation: closed forms and conventions") {
    const ModelSpec m = load("minkowski2");
    const Separation a = time_separation(m, V({0, 0}), V({2, 0}));
    CHECK(a.tau == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(a.chronological);
    CHECK(time_separation(m, V({0, 0}), V({-2, 0})).tau == -std::numeric_limits<double>::infinity());
    CHECK(time_separation(m, V({0, 0}), V({0, 1})).tau == -std::numeric_limits<double>::infinity());
    const Separation l = time_separation(m, V({0, 0}), V({1, 1}));
    CHECK(l.tau == 0.0);
    CHECK_FALSE(l.chronological);

    const ModelSpec r = load("randers2");
    // F(2, 0) = 2·(1 + a) with a = 0.25.
    CHECK(time_separation(r, V({0.3, 0.1}), V({2.3, 0.1})).tau == doctest::Approx(2.5).epsilon(1e-13));
    CHECK(time_separation(r, V({0, 0}), V({-1, 0})).tau == -std::numeric_limits<double>::infinity());
}

TEST_CASE("time separation: reverse triangle inequality on chains") {
    Rng rng(47);
    for (const std::string name : {"minkowski2", "randers2", "product2", "warped2"}) {
        CAPTURE(name);
        const ModelSpec m = load(name);
        const int chains = name == std::string("warped2") ? 4 : 40;
        for (int k = 0; k < chains; ++k) {
            const Vec x = sample_point(m, rng, 0.5);
            const Vec y = x + 0.6 * sample_future_timelike(m, x, rng, 0.3);
            const Vec z = y + 0.6 * sample_future_timelike(m, y, rng, 0.3);
            const double xy = time_separation(m, x, y).tau, yz = time_separation(m, y, z).tau;
            const double xz = time_separation(m, x, z).tau;
            if (!(xy > 0.0 && yz > 0.0)) continue;
            CHECK(xz - xy - yz >= -1e-7);
        }
    }
}
