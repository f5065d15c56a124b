/// @file busemann.hpp
/// @brief Straight lines, Busemann functions, asymptotes, field analysis of b and the splitting checks.
#pragma once

#include <string>
#include <vector>

#include "lfg/duality.hpp"
#include "lfg/dynamics.hpp"

namespace lfg {

// ─── Straight lines ───────────────────────────────────────────────────────────

struct LineSpec {
    ModelSpec model;
    GeodesicPath eta;         ///< η over [−horizon, horizon]
    Vec base, velocity;       ///< η(0), η̇(0)
    double horizon = 0.0;
    bool unit_speed = false;
    bool closed_form = false; ///< η(t) = base + t·velocity for every t
    double max_defect = 0.0;  ///< worst |τ(η(s), η(t)) − (t − s)| over the checked pairs

    /// η(t); beyond the horizon only for closed-form lines.
    Vec point(double t) const;
    /// Largest |t| at which point() is available.
    double reach() const;
};

/// Integrates η over [−T, T] and checks straightness on a grid of `pairs`² parameter pairs.
/// Throws PreconditionFailure unless F(v) = 1 within 1e-9, NotStraight on a defect above 1e-6.
LineSpec validate_line(const ModelSpec& m, const Vec& x, const Vec& v, double T, int pairs = 9);

// ─── Busemann functions ───────────────────────────────────────────────────────

/// b_{η,t}(x) = t − τ(x, η(t)); +∞ when x is not in the chronological past of η(t).
double busemann_partial(const LineSpec& line, const Vec& x, double t);

/// b̄_{η,t}(x) = t − τ(η(−t), x), the partial of the reverse structure along the reversed line.
double reverse_busemann_partial(const LineSpec& line, const Vec& x, double t);

struct BusemannValue {
    double b = 0.0;
    double b_rev = 0.0;
    double tail_estimate = 0.0;      ///< change of the returned extrapolation from its predecessor
    double horizon_used = 0.0;
    double monotone_violation = 0.0; ///< max increase of t ↦ b_{η,t}(x) or b̄_{η,t}(x)
};

struct BusemannOptions {
    double first_horizon = 16.0;
    std::size_t order = 4;     ///< polynomial degree in 1/t of the extrapolation
    double converged = 1e-12;  ///< stop once successive extrapolations differ by less
    double accept = 1e-5;      ///< NoConvergence beyond this
    int max_doublings = 16;
};

/// Horizon doubling with polynomial-in-1/t Richardson extrapolation on the last order + 1 horizons;
/// returns the extrapolation whose change from its predecessor is smallest.
BusemannValue busemann_limit(const LineSpec& line, const Vec& x, const BusemannOptions& opt = {});

struct Asymptote {
    Vec velocity;  ///< extrapolated unit initial velocity
    GeodesicPath path;
    std::vector<double> horizons;
    std::vector<Vec> velocities;  ///< unit connecting velocities per horizon
    double last_change = 0.0;
};

/// Connects x to η(t_k) for each horizon, extrapolates the unit velocities in 1/t and integrates
/// the asymptote over [0, length]. Throws NoConvergence or NonTimelikeLimit.
Asymptote asymptote_from(const LineSpec& line, const Vec& x, const std::vector<double>& horizons, double length = 2.0);

// ─── Busemann fields ──────────────────────────────────────────────────────────

/// Uniform box grid in the coordinate chart, stored with the first coordinate varying slowest.
struct Grid {
    Vec lo;
    Vec step;
    std::vector<int> counts;

    std::size_t size() const;
    Vec point(std::size_t index) const;
    std::vector<int> multi_index(std::size_t index) const;
    std::size_t flat_index(const std::vector<int>& idx) const;
};

/// Grid of `count` points per axis on [c − r, c + r]ⁿ.
Grid box_grid(const Vec& centre, double radius, int count);
/// Grid over a tube: [c₀ − a, c₀ + a] along the first axis and radius r across it.
Grid tube_grid(const Vec& centre, double along, double radius, double step);

/// Degree-5 tensor Lagrange interpolation of grid values, evaluable on jets.
class GridInterpolant {
public:
    GridInterpolant() = default;
    GridInterpolant(Grid grid, std::vector<double> values);

    double value(const Vec& x) const;
    Vec differential(const Vec& x) const;
    /// The covector field sign · dP.
    CovectorField covector(double sign) const;

private:
    Grid grid_;
    std::vector<double> values_;
};

struct BusemannField {
    LineSpec line;
    Grid grid;
    std::vector<double> values, reverse_values, horizon_used, tail, monotone_violation;
    GridInterpolant b, b_rev;
};

BusemannField busemann_field(const LineSpec& line, const Grid& grid, const BusemannOptions& opt = {});

struct FieldPoint {
    Vec x;
    Vec grad;        ///< ∇(−b) = ℒ*(−db)
    double lapse;    ///< F*(−db)
    double hessian;  ///< max |∇²(−b)| entry
    double box_mp;   ///< □_{m,p}(−b)
};

struct FieldReport {
    std::vector<FieldPoint> points;
    double max_lapse_defect = 0.0;
    double max_hessian = 0.0;
    double max_p_harmonic = 0.0;
    double semiconcavity = 0.0;  ///< max second central difference of b along chart axes
};

/// Operators on the interpolant at grid nodes at least two steps from the boundary; throws
/// GridTooCoarse if a step exceeds 0.05.
FieldReport field_analysis(const BusemannField& field, double p);

// ─── Splitting ────────────────────────────────────────────────────────────────

struct SplittingCheck {
    std::string name;
    double max_residual = 0.0;
    double threshold = 0.0;
    bool pass = false;
    bool skipped = false;
    std::string note;
    int samples = 0;
};

struct SigmaSample {
    Vec s;        ///< Σ coordinates x², …, xⁿ
    Vec point;    ///< point of b⁻¹(0)
    Mat h;        ///< recovered h in Σ coordinates
};

struct SplittingReport {
    std::vector<SplittingCheck> checks;
    std::vector<SigmaSample> sigma;
    bool berwald = false;
    double sigma_margin = 0.0;
    bool all_pass() const;
    const SplittingCheck& check(const std::string& name) const;
};

struct SplittingOptions {
    double p = -2.0;
    double tube_along = 1.0;
    double tube_radius = 0.5;
    double grid_step = 0.05;
    std::vector<double> theta_times{-1.0, -0.5, 0.5, 1.0, 2.0};
    int translation_samples = 200;
    int causal_samples = 200;
    std::uint64_t seed = 42;
};

/// Builds the Busemann field on a tube around the line, the level set Σ = b⁻¹(0), the map
/// Θ(t, σ) = ζ_σ(t), and runs every splitting check.
SplittingReport splitting_suite(const LineSpec& line, const SplittingOptions& opt = {});

/// Same, on a field that is already computed.
SplittingReport splitting_suite(const BusemannField& field, const SplittingOptions& opt = {});

struct SplittingRun {
    BusemannField field;
    SplittingReport report;
    double tube_radius = 0.0;  ///< radius actually used
};

/// splitting_suite on a line, keeping the field; halves the tube radius while the tube leaves the domain.
SplittingRun run_splitting(const LineSpec& line, const SplittingOptions& opt = {});

}  // namespace lfg
