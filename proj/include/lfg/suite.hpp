/// @file suite.hpp
/// @brief Sampled identity checks on one model: metric identities, duality, operators, Bochner and Riccati.
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lfg/weighted.hpp"

namespace lfg {

struct SuiteRow {
    std::string check;
    int samples = 0;
    double max_residual = 0.0;
    double threshold = 0.0;
    bool pass = false;
    std::vector<std::pair<std::string, double>> extra;  ///< ordered breakdown columns
    std::string note;
};

struct SuiteOptions {
    std::uint64_t seed = 42;
    int metric_samples = 1000;
    int rcs_pairs = 1000;
    int operator_samples = 100;
    int geodesics = 10;
    int times = 10;
    std::vector<double> ps{-2.0, -1.0, 0.5};
};

// ─── Individual suites ────────────────────────────────────────────────────────

/// g_v(v, v) = 2L(v), 0-homogeneity of g, and the primal and dual Euler identities.
std::vector<SuiteRow> metric_identity_rows(const ModelSpec& m, const SuiteOptions& opt);

/// Legendre round trip, reverse Cauchy–Schwarz gap and its equality case.
std::vector<SuiteRow> duality_rows(const ModelSpec& m, const SuiteOptions& opt);

/// Two routes for □_m and □_{m,p}, and the ellipticity symbol.
std::vector<SuiteRow> operator_rows(const ModelSpec& m, const SuiteOptions& opt);

/// Bochner residual with its term breakdown, and finite-difference confirmation of the first two terms.
std::vector<SuiteRow> bochner_rows(const ModelSpec& m, const SuiteOptions& opt);

/// Riccati residual along Jacobi frames and trace B(0)² = HS.
std::vector<SuiteRow> riccati_rows(const ModelSpec& m, const SuiteOptions& opt);

/// All of the above in a fixed order.
std::vector<SuiteRow> identity_suite(const ModelSpec& m, const SuiteOptions& opt);

// ─── Finite-difference oracle ─────────────────────────────────────────────────

struct BochnerFd {
    double term_div = 0.0;
    double term_dbox = 0.0;
};

/// div_m(∇^{∇h}[F(∇h)²/2]) and d(□_m h)(∇h) by nested five-point stencils of the gradient operator.
BochnerFd bochner_fd_terms(const ModelSpec& m, Expr h, const Vec& x, double step = 1e-3);

}  // namespace lfg
