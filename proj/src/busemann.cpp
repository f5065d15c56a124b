/// @file busemann.cpp
/// @brief Straight lines, Busemann limits, asymptotes, the jet interpolant and the splitting checks.
#include "lfg/busemann.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "lfg/errors.hpp"
#include "lfg/sampling.hpp"

namespace lfg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double speed(const ModelSpec& m, const Vec& x, const Vec& v) {
    if (!m.in_domain(span_of(x), span_of(v))) return 0.0;
    const double L = m.lagrangian_at(span_of(x), span_of(v));
    return L < 0.0 ? std::sqrt(-2.0 * L) : 0.0;
}

/// g₁₁ = −1 and g₁ₖ = 0 at two reference vectors.
bool product_chart(const ModelSpec& m, const Vec& x) {
    const int n = m.n();
    for (double s : {0.0, 0.1}) {
        Vec v = Vec::Unit(n, 0);
        if (n > 1) v[1] = s;
        const Mat g = fundamental_tensor(m, x, v).g;
        if (std::abs(g(0, 0) + 1.0) > 1e-12) return false;
        for (int k = 1; k < n; ++k)
            if (std::abs(g(0, k)) > 1e-12) return false;
    }
    return true;
}

/// Value at 0 of the polynomial through (h_i, y_i).
double extrapolate_to_zero(const std::vector<double>& h, const std::vector<double>& y) {
    double r = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        double w = 1.0;
        for (std::size_t j = 0; j < h.size(); ++j)
            if (j != i) w *= -h[j] / (h[i] - h[j]);
        r += w * y[i];
    }
    return r;
}

}  // namespace

// ─── Straight lines ───────────────────────────────────────────────────────────

Vec LineSpec::point(double t) const {
    if (closed_form) return base + t * velocity;
    if (std::abs(t) > horizon) {
        std::ostringstream os;
        os << "line parameter " << t << " beyond the integrated horizon " << horizon;
        throw PreconditionFailure(os.str());
    }
    return eta.position(t);
}

double LineSpec::reach() const { return closed_form ? kInf : horizon; }

LineSpec validate_line(const ModelSpec& m, const Vec& x, const Vec& v, double T, int pairs) {
    const double F = speed(m, x, v);
    if (std::abs(F - 1.0) > 1e-9) {
        std::ostringstream os;
        os << "line velocity must be unit future timelike, F(v) = " << F;
        throw PreconditionFailure(os.str());
    }
    if (!is_future_timelike(m, x, v)) throw PreconditionFailure("line velocity is not future directed");
    LineSpec line;
    line.model = m;
    line.base = x;
    line.velocity = v;
    line.horizon = T;
    line.unit_speed = true;
    line.eta = integrate_geodesic(m, x, v, -T, T);
    bool still = true;
    if (m.n() > 1) {
        for (int k = 1; k < m.n(); ++k) still = still && v[k] == 0.0;
    }
    line.closed_form = m.family() == Family::Minkowski || m.family() == Family::Flat || m.position_independent() ||
                       (m.family() == Family::Product && still && product_chart(m, x));
    double worst = 0.0, ws = 0.0, wt = 0.0;
    for (int i = 0; i < pairs; ++i)
        for (int j = i + 1; j < pairs; ++j) {
            const double s = -T + 2.0 * T * i / (pairs - 1), t = -T + 2.0 * T * j / (pairs - 1);
            const double tau = time_separation(m, line.point(s), line.point(t)).tau;
            const double defect = std::isfinite(tau) ? std::abs(tau - (t - s)) : kInf;
            if (defect > worst) {
                worst = defect;
                ws = s;
                wt = t;
            }
        }
    line.max_defect = worst;
    if (worst > 1e-6) throw NotStraight(ws, wt, worst);
    return line;
}

// ─── Busemann functions ───────────────────────────────────────────────────────

double busemann_partial(const LineSpec& line, const Vec& x, double t) {
    const Separation s = time_separation(line.model, x, line.point(t));
    return s.chronological ? t - s.tau : kInf;
}

double reverse_busemann_partial(const LineSpec& line, const Vec& x, double t) {
    const Separation s = time_separation(line.model, line.point(-t), x);
    return s.chronological ? t - s.tau : kInf;
}

BusemannValue busemann_limit(const LineSpec& line, const Vec& x, const BusemannOptions& opt) {
    BusemannValue out;
    std::vector<double> h, fb, fr;
    double prev_b = kInf, prev_r = kInf, last_b = kInf, last_r = kInf;
    double best = kInf, best_b = 0.0, best_r = 0.0;
    int stale = 0;
    const double reach = line.reach();
    for (int k = 0; k < opt.max_doublings; ++k) {
        const double t = opt.first_horizon * std::ldexp(1.0, k);
        if (t > reach) break;
        const double b = busemann_partial(line, x, t), r = reverse_busemann_partial(line, x, t);
        if (!std::isfinite(b) || !std::isfinite(r)) continue;
        if (std::isfinite(last_b)) out.monotone_violation = std::max({out.monotone_violation, b - last_b, r - last_r});
        last_b = b;
        last_r = r;
        h.push_back(1.0 / t);
        fb.push_back(b);
        fr.push_back(r);
        out.horizon_used = t;
        if (h.size() < 3) continue;
        const auto used = static_cast<std::ptrdiff_t>(std::min<std::size_t>(h.size(), opt.order + 1));
        const std::vector<double> hh(h.end() - used, h.end());
        const double eb = extrapolate_to_zero(hh, {fb.end() - used, fb.end()});
        const double er = extrapolate_to_zero(hh, {fr.end() - used, fr.end()});
        if (std::isfinite(prev_b)) {
            const double diff = std::max(std::abs(eb - prev_b), std::abs(er - prev_r));
            if (diff < best) {
                best = diff;
                best_b = eb;
                best_r = er;
                stale = 0;
            } else if (++stale >= 2) {
                break;  // round-off floor of t − τ reached
            }
            if (best <= opt.converged) break;
        }
        prev_b = eb;
        prev_r = er;
    }
    if (!(best <= opt.accept)) {
        std::ostringstream os;
        os << "Busemann limit did not converge at x = (" << x.transpose() << "): last extrapolation change " << best
           << " after horizon " << out.horizon_used;
        throw NoConvergence(os.str());
    }
    out.b = best_b;
    out.b_rev = best_r;
    out.tail_estimate = best;
    return out;
}

Asymptote asymptote_from(const LineSpec& line, const Vec& x, const std::vector<double>& horizons, double length) {
    const ModelSpec& m = line.model;
    const int n = m.n();
    Asymptote a;
    std::vector<double> h;
    Vec prev;
    bool converged = false;
    a.last_change = kInf;
    for (double t : horizons) {
        const Connection c = connect_points(m, x, line.point(t));
        if (!c.connected || !(c.length > 0.0))
            throw NoConvergence("no timelike connection to the line at horizon " + std::to_string(t) + ": " + c.diagnostic);
        a.horizons.push_back(t);
        a.velocities.push_back(c.velocity / c.length);
        h.push_back(1.0 / t);
        if (h.size() < 3) continue;
        const std::vector<double> hh(h.end() - 3, h.end());
        Vec r(n);
        for (int i = 0; i < n; ++i) {
            std::vector<double> y;
            for (std::size_t k = a.velocities.size() - 3; k < a.velocities.size(); ++k) y.push_back(a.velocities[k][i]);
            r[i] = extrapolate_to_zero(hh, y);
        }
        if (prev.size() == n) {
            a.last_change = (r - prev).norm();
            if (a.last_change < 1e-7) converged = true;
        }
        prev = r;
        if (converged) break;
    }
    if (!converged) {
        std::ostringstream os;
        os << "asymptote velocities did not settle: last change " << a.last_change;
        throw NoConvergence(os.str());
    }
    const double F = speed(m, x, prev);
    if (!(F > 1e-8) || !is_future_timelike(m, x, prev)) throw NonTimelikeLimit("limit of connecting velocities is not future timelike");
    a.velocity = prev / F;
    a.path = integrate_geodesic(m, x, a.velocity, 0.0, length);
    return a;
}

// ─── Grids ────────────────────────────────────────────────────────────────────

std::size_t Grid::size() const {
    std::size_t s = 1;
    for (int c : counts) s *= static_cast<std::size_t>(c);
    return s;
}

std::vector<int> Grid::multi_index(std::size_t index) const {
    std::vector<int> idx(counts.size());
    for (int i = static_cast<int>(counts.size()) - 1; i >= 0; --i) {
        idx[i] = static_cast<int>(index % counts[i]);
        index /= counts[i];
    }
    return idx;
}

std::size_t Grid::flat_index(const std::vector<int>& idx) const {
    std::size_t f = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) f = f * counts[i] + idx[i];
    return f;
}

Vec Grid::point(std::size_t index) const {
    const std::vector<int> idx = multi_index(index);
    Vec x = lo;
    for (std::size_t i = 0; i < idx.size(); ++i) x[i] += idx[i] * step[i];
    return x;
}

Grid box_grid(const Vec& centre, double radius, int count) {
    const int n = static_cast<int>(centre.size());
    Grid g;
    g.lo = centre - Vec::Constant(n, radius);
    g.step = Vec::Constant(n, 2.0 * radius / (count - 1));
    g.counts.assign(n, count);
    return g;
}

Grid tube_grid(const Vec& centre, double along, double radius, double step) {
    const int n = static_cast<int>(centre.size());
    Grid g;
    g.lo = centre;
    g.step = Vec::Constant(n, step);
    g.counts.resize(n);
    for (int i = 0; i < n; ++i) {
        const double half = i == 0 ? along : radius;
        g.counts[i] = 2 * static_cast<int>(std::lround(half / step)) + 1;
        g.lo[i] -= step * (g.counts[i] - 1) / 2;
    }
    return g;
}

// ─── Interpolation ────────────────────────────────────────────────────────────

namespace {

inline double val(double d) { return d; }
inline double val(const Jet& j) { return j.value(); }

/// Degree-5 Lagrange basis values and derivatives at local coordinate u ∈ [0, 5].
template <class T>
void basis(const T& u, T* l, T* dl) {
    for (int k = 0; k < 6; ++k) {
        T p(1.0);
        double den = 1.0;
        for (int m = 0; m < 6; ++m)
            if (m != k) {
                p = p * (u - T(static_cast<double>(m)));
                den *= k - m;
            }
        l[k] = p * T(1.0 / den);
        T d(0.0);
        for (int j = 0; j < 6; ++j) {
            if (j == k) continue;
            T q(1.0);
            for (int m = 0; m < 6; ++m)
                if (m != k && m != j) q = q * (u - T(static_cast<double>(m)));
            d = d + q;
        }
        dl[k] = d * T(1.0 / den);
    }
}

template <class T>
T interpolate(const Grid& g, const std::vector<double>& values, std::span<const T> x, int axis) {
    const int n = static_cast<int>(g.counts.size());
    std::vector<int> start(n);
    std::vector<std::array<T, 6>> B(n), dB(n);
    for (int i = 0; i < n; ++i) {
        const double local = (val(x[i]) - g.lo[i]) / g.step[i];
        start[i] = std::clamp(static_cast<int>(std::floor(local)) - 2, 0, g.counts[i] - 6);
        const T u = (x[i] - T(g.lo[i])) * T(1.0 / g.step[i]) - T(static_cast<double>(start[i]));
        basis(u, B[i].data(), dB[i].data());
        if (i == axis)
            for (auto& d : dB[i]) d = d * T(1.0 / g.step[i]);
    }
    T sum(0.0);
    std::vector<int> k(n, 0), idx(n);
    const int total = static_cast<int>(std::pow(6, n));
    for (int c = 0; c < total; ++c) {
        int r = c;
        for (int i = n - 1; i >= 0; --i) {
            k[i] = r % 6;
            r /= 6;
            idx[i] = start[i] + k[i];
        }
        T w(values[g.flat_index(idx)]);
        for (int i = 0; i < n; ++i) w = w * (i == axis ? dB[i][k[i]] : B[i][k[i]]);
        sum = sum + w;
    }
    return sum;
}

}  // namespace

GridInterpolant::GridInterpolant(Grid grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
    for (int c : grid_.counts)
        if (c < 6) throw GridTooCoarse("degree-5 interpolation needs at least 6 nodes per axis");
    if (values_.size() != grid_.size()) throw Error("grid value count does not match the grid");
}

double GridInterpolant::value(const Vec& x) const { return interpolate<double>(grid_, values_, span_of(x), -1); }

Vec GridInterpolant::differential(const Vec& x) const {
    Vec d(x.size());
    for (int i = 0; i < x.size(); ++i) d[i] = interpolate<double>(grid_, values_, span_of(x), i);
    return d;
}

CovectorField GridInterpolant::covector(double sign) const {
    GridInterpolant self = *this;
    return [self, sign](std::span<const Jet> x) {
        std::vector<Jet> w(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            w[i] = interpolate<Jet>(self.grid_, self.values_, x, static_cast<int>(i)) * Jet(sign);
        return w;
    };
}

// ─── Busemann fields ──────────────────────────────────────────────────────────

BusemannField busemann_field(const LineSpec& line, const Grid& grid, const BusemannOptions& opt) {
    BusemannField f;
    f.line = line;
    f.grid = grid;
    const std::size_t N = grid.size();
    f.values.resize(N);
    f.reverse_values.resize(N);
    f.horizon_used.resize(N);
    f.tail.resize(N);
    f.monotone_violation.resize(N);
    for (std::size_t i = 0; i < N; ++i) {
        const BusemannValue v = busemann_limit(line, grid.point(i), opt);
        f.values[i] = v.b;
        f.reverse_values[i] = v.b_rev;
        f.horizon_used[i] = v.horizon_used;
        f.tail[i] = v.tail_estimate;
        f.monotone_violation[i] = v.monotone_violation;
    }
    f.b = GridInterpolant(grid, f.values);
    f.b_rev = GridInterpolant(grid, f.reverse_values);
    return f;
}

FieldReport field_analysis(const BusemannField& field, double p) {
    const Grid& g = field.grid;
    const int n = static_cast<int>(g.counts.size());
    for (int i = 0; i < n; ++i) {
        if (g.step[i] > 0.05 + 1e-12) throw GridTooCoarse("grid step " + std::to_string(g.step[i]) + " exceeds 0.05");
        if (g.counts[i] < 6) throw GridTooCoarse("at least 6 nodes per axis are needed");
    }
    FieldReport r;
    const CovectorField omega = field.b.covector(-1.0);
    const ModelSpec& m = field.line.model;
    for (std::size_t k = 0; k < g.size(); ++k) {
        const std::vector<int> idx = g.multi_index(k);
        bool inner = true;
        for (int i = 0; i < n; ++i) inner = inner && idx[i] >= 2 && idx[i] <= g.counts[i] - 3;
        if (!inner) continue;
        const Vec x = g.point(k);
        const FieldAnalysis a = analyze_field(m, omega, x, p);
        FieldPoint fp{x, a.V, a.F, a.H.cwiseAbs().maxCoeff(), a.box_mp};
        r.max_lapse_defect = std::max(r.max_lapse_defect, std::abs(a.F - 1.0));
        r.max_hessian = std::max(r.max_hessian, fp.hessian);
        r.max_p_harmonic = std::max(r.max_p_harmonic, std::abs(a.box_mp));
        for (int i = 0; i < n; ++i) {
            std::vector<int> up = idx, dn = idx;
            ++up[i];
            --dn[i];
            const double d2 = (field.values[g.flat_index(up)] - 2 * field.values[k] + field.values[g.flat_index(dn)]) /
                              (g.step[i] * g.step[i]);
            r.semiconcavity = std::max(r.semiconcavity, d2);
        }
        r.points.push_back(std::move(fp));
    }
    return r;
}

// ─── Splitting ────────────────────────────────────────────────────────────────

bool SplittingReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const SplittingCheck& c) { return c.skipped || c.pass; });
}

const SplittingCheck& SplittingReport::check(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return c;
    throw Error("no splitting check named '" + name + "'");
}

namespace {

SplittingCheck make_check(std::string name, double residual, double threshold, int samples, std::string note = {}) {
    SplittingCheck c{std::move(name), residual, threshold, residual <= threshold, false, std::move(note), samples};
    return c;
}

SplittingCheck skipped(std::string name, double threshold, std::string reason) {
    SplittingCheck c;
    c.name = std::move(name);
    c.threshold = threshold;
    c.skipped = true;
    c.note = std::move(reason);
    return c;
}

/// Local data of the Busemann field at one point.
struct FieldAt {
    Vec V;   ///< ∇(−b)
    Mat dV;  ///< ∂_j V^i
    Vec db;
};

FieldAt field_at(const BusemannField& f, const Vec& x, double p) {
    const FieldAnalysis a = analyze_field(f.line.model, f.b.covector(-1.0), x, p);
    const Mat N = spray_and_connections(f.line.model, x, a.V).nconn;
    return {a.V, a.H - N, f.b.differential(x)};
}

/// Σ tangent vectors w_k = e_k − (db_k/db_0) e_0 for k ≥ 1.
std::vector<Vec> sigma_tangents(const Vec& db) {
    const int n = static_cast<int>(db.size());
    std::vector<Vec> w;
    for (int k = 1; k < n; ++k) {
        Vec e = Vec::Unit(n, k);
        e[0] = -db[k] / db[0];
        w.push_back(e);
    }
    return w;
}

/// Point of b⁻¹(0) with Σ coordinates s, by Newton on the first coordinate.
Vec sigma_point(const BusemannField& f, const Vec& s, double x0) {
    const int n = static_cast<int>(s.size()) + 1;
    Vec x(n);
    x[0] = x0;
    x.tail(n - 1) = s;
    for (int it = 0; it < 60; ++it) {
        const double b = f.b.value(x);
        if (std::abs(b) <= 1e-10) return x;
        const double d0 = f.b.differential(x)[0];
        if (!(std::abs(d0) > 1e-8)) break;
        x[0] -= b / d0;
    }
    std::ostringstream os;
    os << "level set b = 0 not found above Σ coordinates (" << s.transpose() << ")";
    throw NoConvergence(os.str());
}

/// Recovered h at a Σ point: g_V(w_k, w_l).
Mat recovered_h(const BusemannField& f, const Vec& sigma, double p) {
    const FieldAt fa = field_at(f, sigma, p);
    const std::vector<Vec> w = sigma_tangents(fa.db);
    const Mat g = fundamental_tensor(f.line.model, sigma, fa.V).g;
    const int k = static_cast<int>(w.size());
    Mat h(k, k);
    for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) h(a, b) = w[a].dot(g * w[b]);
    return h;
}

/// Lattice of Σ coordinates with `per_axis` points per axis on [c − r, c + r].
std::vector<Vec> sigma_coordinates(const Vec& centre, double r, int per_axis) {
    const int k = static_cast<int>(centre.size());
    std::vector<Vec> out;
    int total = 1;
    for (int i = 0; i < k; ++i) total *= per_axis;
    for (int c = 0; c < total; ++c) {
        Vec s = centre;
        int rem = c;
        for (int i = k - 1; i >= 0; --i) {
            s[i] += -r + 2.0 * r * (rem % per_axis) / (per_axis - 1);
            rem /= per_axis;
        }
        out.push_back(s);
    }
    return out;
}

/// Inner box of the grid (two steps from the boundary).
Vec inner_point(const Grid& g, Rng& rng) {
    Vec x = g.lo;
    for (int i = 0; i < x.size(); ++i) x[i] += uniform(rng, 2.0, g.counts[i] - 3.0) * g.step[i];
    return x;
}

/// Σ coordinates of the point reached from x by flowing along the asymptote for time −b(x).
Vec project_to_sigma(const BusemannField& f, const Vec& x, double p) {
    const double t = f.b.value(x);
    if (std::abs(t) < 1e-15) return x.tail(x.size() - 1);
    const FieldAt fa = field_at(f, x, p);
    OdeOptions opt;
    opt.abs_tol = opt.rel_tol = 1e-13;
    const GeodesicPath z = integrate_geodesic(f.line.model, x, fa.V, std::min(0.0, -t), std::max(0.0, -t), opt);
    const Vec y = z.position(-t);
    return y.tail(y.size() - 1);
}

}  // namespace

SplittingRun run_splitting(const LineSpec& line, const SplittingOptions& opt) {
    double radius = opt.tube_radius;
    for (;;) {
        try {
            SplittingOptions o = opt;
            o.tube_radius = radius;
            SplittingRun run;
            run.field = busemann_field(line, tube_grid(line.base, opt.tube_along, radius, opt.grid_step));
            run.report = splitting_suite(run.field, o);
            run.tube_radius = radius;
            return run;
        } catch (const DomainError&) {
        } catch (const LeftDomain&) {
        }
        radius *= 0.5;
        if (radius < 4 * opt.grid_step) throw PreconditionFailure("the splitting tube leaves the model domain at every radius");
    }
}

SplittingReport splitting_suite(const LineSpec& line, const SplittingOptions& opt) {
    return run_splitting(line, opt).report;
}

SplittingReport splitting_suite(const BusemannField& field, const SplittingOptions& opt) {
    const ModelSpec& m = field.line.model;
    const int n = m.n();
    const double p = opt.p;
    SplittingReport rep;
    rep.berwald = berwald_diagnostic(m, field.line.base, 20, opt.seed).is_berwald_numerically;

    // (a) b + b̄ on the tube.
    {
        double hi = 0.0, lo = 0.0;
        for (std::size_t i = 0; i < field.values.size(); ++i) {
            const double s = field.values[i] + field.reverse_values[i];
            hi = std::max(hi, s);
            lo = std::min(lo, s);
        }
        SplittingCheck c = make_check("sum_check", std::max(hi, -lo), 1e-6, static_cast<int>(field.values.size()));
        if (lo < -1e-8) {
            c.pass = false;
            c.note = "b + b_rev below -1e-8";
        }
        rep.checks.push_back(c);
    }

    // Field-level checks.
    const FieldReport fr = field_analysis(field, p);
    const int fn = static_cast<int>(fr.points.size());
    rep.checks.push_back(make_check("unit_lapse", fr.max_lapse_defect, 1e-5, fn));
    rep.checks.push_back(make_check("hessian_vanishing", fr.max_hessian, 1e-5, fn));
    rep.checks.push_back(make_check("p_harmonicity", fr.max_p_harmonic, 1e-5, fn));

    // Σ and the map Θ.
    const Grid& g = field.grid;
    const Vec centre = field.line.base;
    const double sr = 0.8 * (g.step[1] * (g.counts[1] - 1) / 2 - 2 * g.step[1]);
    const std::vector<Vec> coords = sigma_coordinates(centre.tail(n - 1), sr, n == 2 ? 9 : 5);
    std::vector<double> times{0.0};
    times.insert(times.end(), opt.theta_times.begin(), opt.theta_times.end());
    double off_block = 0.0, t_drift = 0.0, measure_drift = 0.0, h_err = 0.0;
    const bool product = m.family() == Family::Product;
    for (const Vec& s : coords) {
        const Vec sigma = sigma_point(field, s, centre[0]);
        const FieldAt fa = field_at(field, sigma, p);
        FlowState start;
        start.x = sigma;
        start.v = fa.V;
        for (const Vec& w : sigma_tangents(fa.db)) {
            start.X.push_back(w);
            start.Y.push_back(fa.dV * w);
        }
        const std::vector<FlowState> flow = integrate_flow(m, start, times);
        Mat G0;
        double mu0 = 0.0;
        for (std::size_t k = 0; k < flow.size(); ++k) {
            const FlowState& st = flow[k];
            Mat J(n, n);
            J.col(0) = st.v;
            for (int a = 1; a < n; ++a) J.col(a) = st.X[a - 1];
            const Mat G = J.transpose() * fundamental_tensor(m, st.x, st.v).g * J;
            const double mu = m.weight_at(span_of(st.x)) * std::abs(J.determinant());
            off_block = std::max(off_block, std::abs(G(0, 0) + 1.0));
            for (int a = 1; a < n; ++a) off_block = std::max(off_block, std::abs(G(0, a)));
            if (k == 0) {
                G0 = G;
                mu0 = mu;
            } else {
                t_drift = std::max(t_drift, (G - G0).bottomRightCorner(n - 1, n - 1).cwiseAbs().maxCoeff());
                measure_drift = std::max(measure_drift, std::abs(mu - mu0) / std::abs(mu0));
            }
        }
        const Mat h = G0.bottomRightCorner(n - 1, n - 1);
        rep.sigma.push_back({s, sigma, h});
        if (product) {
            const Mat gm = fundamental_tensor(m, sigma, Vec::Unit(n, 0)).g;
            h_err = std::max(h_err, (h - gm.bottomRightCorner(n - 1, n - 1)).cwiseAbs().maxCoeff());
        }
    }
    const int ns = static_cast<int>(coords.size());
    const int nt = ns * static_cast<int>(opt.theta_times.size());
    std::ostringstream note;
    note << std::scientific << std::setprecision(3) << "off-block " << off_block << ", t-drift " << t_drift;
    rep.checks.push_back(make_check("metric_product", std::max(off_block, t_drift), 1e-5, nt, note.str()));
    if (product)
        rep.checks.push_back(make_check("h_recovery", h_err, 1e-5, ns));
    else
        rep.checks.push_back(skipped("h_recovery", 1e-5, "no constructed h for a non-product family"));
    rep.checks.push_back(make_check("measure_product", measure_drift, 1e-5, nt));

    // (d), (e) Berwald translations and projected geodesics.
    if (!rep.berwald) {
        rep.checks.push_back(skipped("translation_isometry", 1e-7, "model is not Berwald"));
        rep.checks.push_back(skipped("geodesic_split", 1e-5, "model is not Berwald"));
    } else {
        Rng rng(opt.seed);
        const double ts[3] = {0.5, 1.0, 2.0};
        double worst = 0.0;
        for (int i = 0; i < opt.translation_samples; ++i) {
            const Vec x = inner_point(g, rng);
            const Vec v = sample_future_timelike(m, x, rng);
            const FieldAt fa = field_at(field, x, p);
            FlowState start;
            start.x = x;
            start.v = fa.V;
            start.X = {v};
            start.Y = {fa.dV * v};
            const FlowState end = integrate_flow(m, start, {ts[i % 3]}).front();
            const double dL = m.lagrangian_at(span_of(end.x), span_of(end.X[0])) - m.lagrangian_at(span_of(x), span_of(v));
            worst = std::max(worst, std::abs(dL));
        }
        rep.checks.push_back(make_check("translation_isometry", worst, 1e-7, opt.translation_samples));

        double split = 0.0;
        const double du = 0.02;
        const int geodesics = 6;
        for (int i = 0; i < geodesics; ++i) {
            const Vec x = inner_point(g, rng);
            Vec v = sample_future_timelike(m, x, rng);
            v /= speed(m, x, v);
            const GeodesicPath gam = integrate_geodesic(m, x, v, -2 * du, 2 * du);
            std::vector<double> tt(5);
            std::vector<Vec> ss(5);
            for (int j = 0; j < 5; ++j) {
                const Vec y = gam.position((j - 2) * du);
                tt[j] = field.b.value(y);
                ss[j] = project_to_sigma(field, y, p);
            }
            const double tpp = (-tt[0] + 16 * tt[1] - 30 * tt[2] + 16 * tt[3] - tt[4]) / (12 * du * du);
            const Vec sp = (ss[0] - 8 * ss[1] + 8 * ss[3] - ss[4]) / (12 * du);
            const Vec spp = (-ss[0] + 16 * ss[1] - 30 * ss[2] + 16 * ss[3] - ss[4]) / (12 * du * du);
            // Christoffel symbols of the recovered h at the projected point.
            const int k = n - 1;
            const double hs = 1e-3;
            const Vec s0 = ss[2];
            const double x0 = sigma_point(field, s0, centre[0])[0];
            const Mat h0 = recovered_h(field, sigma_point(field, s0, x0), p);
            std::vector<Mat> dh(k);
            for (int a = 0; a < k; ++a) {
                Mat acc = Mat::Zero(k, k);
                const double wts[4] = {1.0, -8.0, 8.0, -1.0};
                const double offs[4] = {-2.0, -1.0, 1.0, 2.0};
                for (int q = 0; q < 4; ++q) {
                    Vec sq = s0;
                    sq[a] += offs[q] * hs;
                    acc += wts[q] * recovered_h(field, sigma_point(field, sq, x0), p);
                }
                dh[a] = acc / (12 * hs);
            }
            const Mat hinv = h0.inverse();
            Vec res = spp;
            for (int a = 0; a < k; ++a)
                for (int b = 0; b < k; ++b)
                    for (int c = 0; c < k; ++c) {
                        double gam_abc = 0.0;
                        for (int d = 0; d < k; ++d) gam_abc += 0.5 * hinv(a, d) * (dh[b](d, c) + dh[c](d, b) - dh[d](b, c));
                        res[a] += gam_abc * sp[b] * sp[c];
                    }
            split = std::max({split, std::abs(tpp), res.cwiseAbs().maxCoeff()});
        }
        rep.checks.push_back(make_check("geodesic_split", split, 1e-5, geodesics));
    }

    // (f) Σ transversality to future causal vectors.
    {
        Rng rng(opt.seed + 1);
        double margin = kInf;
        int count = 0;
        for (int i = 0; i < opt.causal_samples; ++i) {
            const SigmaSample& ss = rep.sigma[i % rep.sigma.size()];
            const Vec x = ss.point;
            const Vec db = field.b.differential(x);
            Vec v = sample_future_timelike(m, x, rng);
            if (i % 2 == 1) {
                // Push towards the boundary of the future cone (or of the domain).
                const Vec r = gaussian_vector(n, rng) * (2.0 * v.norm());
                double a = 0.0, b = 1.0;
                if (is_future_timelike(m, x, v + r)) {
                    v = v + r;
                } else {
                    for (int it = 0; it < 60; ++it) {
                        const double c = 0.5 * (a + b);
                        (is_future_timelike(m, x, v + c * r) ? a : b) = c;
                    }
                    v = v + a * r;
                }
            }
            margin = std::min(margin, db.dot(v) / v.norm());
            ++count;
        }
        rep.sigma_margin = margin;
        std::ostringstream os;
        os << std::scientific << std::setprecision(6) << "min db(v)/|v| = " << margin;
        SplittingCheck c = make_check("sigma_causal", -margin, 0.0, count, os.str());
        c.pass = margin > 0.0;
        rep.checks.push_back(c);
    }
    return rep;
}

}  // namespace lfg
