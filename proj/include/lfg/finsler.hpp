/// @file finsler.hpp
/// @brief Fundamental tensor, causal character, sprays, connections and curvature.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "lfg/model.hpp"

namespace lfg {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Three-index array T^i_jk stored as [(i·n + j)·n + k].
struct Tensor3 {
    int n = 0;
    std::vector<double> a;

    Tensor3() = default;
    explicit Tensor3(int dim) : n(dim), a(dim * dim * dim, 0.0) {}
    double& operator()(int i, int j, int k) { return a[(i * n + j) * n + k]; }
    double operator()(int i, int j, int k) const { return a[(i * n + j) * n + k]; }
    /// Matrix (j, k) ↦ T^i_jk.
    Mat slice(int i) const;
};

inline std::span<const double> span_of(const Vec& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
Vec to_vec(const std::vector<double>& v);

// ─── Metric ───────────────────────────────────────────────────────────────────

struct MetricAt {
    Vec base, reference;
    double L = 0.0;
    Vec p;  ///< ∂L/∂v
    Mat g, g_inv;
    double det_g = 0.0;
};

/// Throws SignatureError unless g has one negative and n−1 positive eigenvalues
/// with magnitudes above 1e-10.
void check_signature(const Mat& g);

MetricAt fundamental_tensor(const ModelSpec& m, const Vec& x, const Vec& v);

// ─── Causal character ─────────────────────────────────────────────────────────

enum class CausalClass { Timelike, Lightlike, Spacelike, Zero };
enum class TimeOrientation { Future, Past, None };

std::string to_string(CausalClass c);
std::string to_string(TimeOrientation o);

struct CausalInfo {
    CausalClass cls = CausalClass::Zero;
    TimeOrientation orientation = TimeOrientation::None;
    std::optional<double> F;
    double L = 0.0;
};

CausalInfo classify_causal(const ModelSpec& m, const Vec& x, const Vec& v);

/// In-domain, timelike and future directed.
bool is_future_timelike(const ModelSpec& m, const Vec& x, const Vec& v);

/// F(v) = √(−2L(v)) for causal v; throws NotTemporal otherwise.
double finsler_norm(const ModelSpec& m, const Vec& x, const Vec& v);

// ─── Connections ──────────────────────────────────────────────────────────────

struct ConnectionAt {
    Vec base, reference;
    Tensor3 gamma;  ///< γ^i_jk
    Vec spray;      ///< G^i
    Mat nconn;      ///< N^i_j
    Tensor3 chern;  ///< Γ^i_jk
    Mat dspray_dx;  ///< ∂G^i/∂x^j
    Mat g, g_inv;
    Tensor3 dgv;    ///< ∂g_ij/∂v^k stored as (i, j, k)
};

ConnectionAt spray_and_connections(const ModelSpec& m, const Vec& x, const Vec& v);

/// D_v^w X for a vector field whose components are expressions in x.
Vec covariant_derivative(const ModelSpec& m, const std::vector<Expr>& field, const Vec& x, const Vec& v,
                         const Vec& w);

// ─── Curvature ────────────────────────────────────────────────────────────────

struct CurvatureAt {
    Mat R;  ///< R^i_j(v)
    double ricci = 0.0;
};

CurvatureAt curvature_and_ricci(const ModelSpec& m, const Vec& x, const Vec& v);

struct BerwaldReport {
    bool is_berwald_numerically = false;
    double max_fiber_variation = 0.0;
    int samples = 0;
};

BerwaldReport berwald_diagnostic(const ModelSpec& m, const Vec& x, int sample_count, std::uint64_t seed = 1);

}  // namespace lfg
