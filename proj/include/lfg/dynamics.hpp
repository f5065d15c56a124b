/// @file dynamics.hpp
/// @brief Geodesics, parallel transport, Jacobi frames, the Riccati residual and time separation.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lfg/finsler.hpp"

namespace lfg {

// ─── Integration options ──────────────────────────────────────────────────────

struct OdeOptions {
    double abs_tol = 1e-12;
    double rel_tol = 1e-12;
    double min_step = 1e-12;
    double max_step = 0.5;
    long max_steps = 2000000;
};

// ─── Geodesic paths ───────────────────────────────────────────────────────────

struct GeodesicSample {
    double t = 0.0;
    Vec x, v, a, j;  ///< position, velocity, acceleration −G(v), jerk
};

/// A solution of ẍ + G(ẋ) = 0 with quintic Hermite interpolation between the
/// accepted steps of the integrator.
class GeodesicPath {
public:
    GeodesicPath() = default;
    GeodesicPath(ModelSpec m, std::vector<GeodesicSample> samples, bool unit_speed);

    const ModelSpec& model() const { return model_; }
    const std::vector<GeodesicSample>& samples() const { return samples_; }
    bool unit_speed() const { return unit_speed_; }
    double t_min() const { return samples_.front().t; }
    double t_max() const { return samples_.back().t; }

    Vec position(double t) const;
    Vec velocity(double t) const;
    Vec acceleration(double t) const;

    /// max |L(ẋ(t)) − L(ẋ(0))| over the samples.
    double lagrangian_drift() const;
    /// max ‖ẍ + G(ẋ)‖ of the interpolant at interval midpoints.
    double max_residual() const;

private:
    std::size_t interval(double t) const;
    ModelSpec model_;
    std::vector<GeodesicSample> samples_;
    bool unit_speed_ = false;
};

/// Integrates from (x, v) at t = 0 forward to t_hi ≥ 0 and backward to t_lo ≤ 0.
/// Throws LeftDomain (with the exit time) or StepFailure.
GeodesicPath integrate_geodesic(const ModelSpec& m, const Vec& x, const Vec& v, double t_lo, double t_hi,
                                const OdeOptions& opt = {});

/// exp_x(v): the endpoint at t = 1 of integrate_geodesic.
Vec exp_map(const ModelSpec& m, const Vec& x, const Vec& v, const OdeOptions& opt = {});

// ─── Variational flow ─────────────────────────────────────────────────────────

/// State of the geodesic flow with k linearized variations (X, Y) = (∂x, ∂v)
/// and r vectors parallel along the geodesic.
struct FlowState {
    Vec x, v;
    std::vector<Vec> X, Y, W;
};

/// Integrates a flow state from t = 0 to each requested time (any order, any sign).
std::vector<FlowState> integrate_flow(const ModelSpec& m, const FlowState& start, const std::vector<double>& times,
                                      const OdeOptions& opt = {});

// ─── Parallel transport ───────────────────────────────────────────────────────

struct TransportedField {
    std::vector<double> t;
    std::vector<Vec> x, velocity, W;
};

/// Solves D^{η̇}_{η̇} W = 0 along the geodesic of `path` at the path's sample times.
TransportedField parallel_transport(const GeodesicPath& path, const Vec& w0, const OdeOptions& opt = {});

// ─── Jacobi frames ────────────────────────────────────────────────────────────

struct FrameAt {
    double t = 0.0;
    Vec x, velocity;
    Mat E;   ///< columns E_i(t)
    Mat DE;  ///< columns D_{ζ̇} E_i(t)
    Mat A;   ///< a_ij = g_ζ̇(E_i, E_j)
    Mat B;   ///< D_{ζ̇} E_i = Σ_j b_ij E_j
};

/// Jacobi fields of the gradient flow of h along ζ(t) = exp_x(t∇h(x)).
class JacobiFrame {
public:
    JacobiFrame(ModelSpec m, Expr h, Vec x, OdeOptions opt = {});

    const ModelSpec& model() const { return model_; }
    const Vec& base() const { return x_; }
    const Vec& gradient() const { return grad_; }  ///< ∇h(x)
    const Mat& hessian() const { return hess_; }   ///< ∇²h(x) as a map
    const Mat& initial_frame() const { return e_; }

    FrameAt at(double t) const;
    std::vector<FrameAt> at(const std::vector<double>& ts) const;

private:
    FrameAt assemble(double t, const FlowState& s) const;
    ModelSpec model_;
    Expr h_;
    Vec x_, grad_;
    Mat hess_, e_;
    OdeOptions opt_;
};

/// |d/dt trace B + trace B² + Ric(ζ̇)| at t, the derivative by a five-point stencil.
double riccati_residual(const JacobiFrame& frame, double t, double step = 1e-3);

/// riccati_residual at several times from a single integration.
std::vector<double> riccati_residuals(const JacobiFrame& frame, const std::vector<double>& ts, double step = 1e-3);

/// Five-point stencil of t ↦ trace B(t).
double trace_b_derivative(const JacobiFrame& frame, double t, double step = 1e-3);

// ─── Connection and time separation ───────────────────────────────────────────

struct Connection {
    bool connected = false;
    Vec velocity;         ///< exp_x(velocity) = y
    double length = 0.0;  ///< F(velocity)
    std::optional<GeodesicPath> path;
    int converged_seeds = 0;
    std::string diagnostic;
};

/// Single shooting with Newton on exp_x(v) = y from a fan of future seeds; the
/// converged future causal solution with the largest length wins.
Connection connect_points(const ModelSpec& m, const Vec& x, const Vec& y, const OdeOptions& opt = {});

struct Separation {
    double tau = 0.0;  ///< −∞ when no future causal connection is known
    bool chronological = false;
    std::string method;
};

/// τ(x, y) by a closed form for flat and product families, otherwise by shooting.
Separation time_separation(const ModelSpec& m, const Vec& x, const Vec& y);

/// x ↦ τ(z, x) = F(x − z) as an expression in x, valid on the chronological future of z.
/// Throws PreconditionFailure unless L is position independent.
Expr flat_separation_expr(const ModelSpec& m, const Vec& z);

/// Σ-distance of a product model −dt² + h with one-dimensional Σ.
double product_fiber_distance(const ModelSpec& m, double y0, double y1);

}  // namespace lfg
