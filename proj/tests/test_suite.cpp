/// @file test_suite.cpp
/// @brief Identity suite rows, reseeding and the finite-difference Bochner oracle.
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "lfg/duality.hpp"
#include "lfg/model.hpp"
#include "lfg/sampling.hpp"
#include "lfg/suite.hpp"

using namespace lfg;

namespace {

ModelSpec load(const std::string& name) { return load_model_file(std::string(LFG_MODELS_DIR) + "/" + name + ".model").model; }

Vec V(std::initializer_list<double> l) {
    Vec v(static_cast<Eigen::Index>(l.size()));
    int i = 0;
    for (double d : l) v[i++] = d;
    return v;
}

SuiteOptions small(std::uint64_t seed) {
    SuiteOptions o;
    o.seed = seed;
    o.metric_samples = 200;
    o.rcs_pairs = 200;
    o.operator_samples = 30;
    o.geodesics = 4;
    return o;
}

const SuiteRow& row(const std::vector<SuiteRow>& rows, const std::string& name) {
    for (const SuiteRow& r : rows)
        if (r.check == name) return r;
    FAIL("missing row " << name);
    return rows.front();
}

}  // namespace

TEST_CASE("identity suite: rows in fixed order, all passing on Minkowski space") {
    const auto rows = identity_suite(load("minkowski2"), small(42));
    const std::vector<std::string> names{"metric_euler",     "homogeneity",      "primal_euler",  "dual_euler",
                                         "legendre_roundtrip", "rcs_gap",        "rcs_equality",  "box_two_route",
                                         "box_mp_two_route", "hessian_symmetry", "ellipticity",   "bochner",
                                         "bochner_fd",       "riccati",          "hilbert_schmidt"};
    REQUIRE(rows.size() == names.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CAPTURE(rows[i].check);
        CHECK(rows[i].check == names[i]);
        CHECK(rows[i].pass);
        CHECK(rows[i].max_residual <= 1e-8);
        CHECK(rows[i].samples > 0);
    }
}

TEST_CASE("identity suite: Bochner row carries the term breakdown") {
    const auto rows = bochner_rows(load("warped2"), small(5));
    const SuiteRow& b = row(rows, "bochner");
    REQUIRE(b.extra.size() == 4);
    CHECK(b.extra[0].first == "term_div");
    CHECK(b.extra[1].first == "term_dbox");
    CHECK(b.extra[2].first == "term_ric");
    CHECK(b.extra[3].first == "term_hs");
    double sum = 0.0;
    for (const auto& [k, v] : b.extra) sum += v;
    CHECK(std::abs(sum) <= 1e-6);
}

TEST_CASE("identity suite: reseeding keeps every verdict") {
    for (const char* name : {"randers2", "weighted_warped2"}) {
        CAPTURE(name);
        const ModelSpec m = load(name);
        const auto a = identity_suite(m, small(1));
        const auto b = identity_suite(m, small(99));
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CAPTURE(a[i].check);
            CHECK(a[i].pass == b[i].pass);
            CHECK(a[i].pass);
        }
    }
}

TEST_CASE("identity suite: the proportional pairs populate the equality case") {
    const auto rows = duality_rows(load("perturbed2"), small(3));
    const SuiteRow& eq = row(rows, "rcs_equality");
    CHECK(eq.samples >= 200);
    CHECK(row(rows, "rcs_gap").pass);
}

TEST_CASE("reverse Cauchy-Schwarz: the gap is quadratic in the proportionality defect") {
    // With rapidity φ between v and ℒ*(ω), gap = F(v)F*(ω)(cosh φ − 1) ≈ F F* φ²/2, so a small gap
    // bounds the defect by a multiple of √(gap / F F*), not by the gap itself.
    for (const char* name : {"minkowski2", "perturbed2", "randers2"}) {
        CAPTURE(name);
        const ModelSpec m = load(name);
        Rng rng(12);
        for (int s = 0; s < 300; ++s) {
            const Vec x = sample_point(m, rng);
            const Vec w = sample_future_timelike(m, x, rng);
            const Vec omega = fundamental_tensor(m, x, w).p;
            const DualAt d = legendre_transform(m, x, omega);
            // Perturbations of the equality direction at geometrically shrinking angles.
            const Vec dir = gaussian_vector(m.n(), rng);
            for (double a : {1e-2, 1e-4, 1e-6}) {
                const Vec v = d.legendre + a * d.legendre.norm() * dir;
                if (!is_future_timelike(m, x, v)) continue;
                const double gap = reverse_cauchy_schwarz_check(m, x, v, omega);
                CHECK(gap >= -1e-10);
                const double scale = d.F_star * finsler_norm(m, x, v);
                CHECK(proportionality_defect(v, d.legendre) <= 100.0 * std::sqrt(std::max(gap, 0.0) / scale) + 1e-7);
            }
        }
    }
}

TEST_CASE("finite-difference Bochner terms: hand-computed Minkowski example") {
    // h = −x1 − 0.05 x2²: ∇h = (1, −0.1 x2), F(∇h)²/2 = (1 − 0.01 x2²)/2, so the lapse gradient is
    // (0, −0.01 x2) with divergence −0.01, and □h = −0.1 is constant.
    const BochnerFd fd = bochner_fd_terms(load("minkowski2"), parse("-x1 - 0.05*x2^2"), V({0.3, 0.2}));
    CHECK(std::abs(fd.term_div + 0.01) <= 1e-8);
    CHECK(std::abs(fd.term_dbox) <= 1e-8);
}

TEST_CASE("finite-difference Bochner terms: exponential weight") {
    // σ = e^{−x1}, h = −x1: ∇h = (1, 0) has unit lapse, and □_m h = ∂_i V^i + V·∂ log σ = −1.
    const BochnerFd fd = bochner_fd_terms(load("weighted_minkowski2"), parse("-x1"), V({0.1, -0.4}));
    CHECK(std::abs(fd.term_div) <= 1e-8);
    CHECK(std::abs(fd.term_dbox) <= 1e-8);
}
