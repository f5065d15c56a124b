/// @file dynamics.cpp
/// @brief Geodesic flow, its linearization, parallel transport, Jacobi frames and time separation.
#include "lfg/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>

#include "lfg/detail/pointwise.hpp"
#include "lfg/duality.hpp"
#include "lfg/errors.hpp"

namespace lfg {

namespace {

namespace odeint = boost::numeric::odeint;
using State = std::vector<double>;

std::string describe(const Vec& a) {
    std::ostringstream os;
    os.precision(10);
    os << "(";
    for (int i = 0; i < a.size(); ++i) os << (i ? ", " : "") << a[i];
    os << ")";
    return os.str();
}

/// Geodesic flow with k variations (X, Y) and r parallel vectors, flattened as
/// [x | v | X₁ Y₁ … X_k Y_k | W₁ … W_r].
struct FlowSystem {
    const ModelSpec* m;
    int n, k, r;

    void operator()(const State& s, State& ds, double /*t*/) const {
        const std::span<const double> x(s.data(), n), v(s.data() + n, n);
        for (int i = 0; i < n; ++i) ds[i] = v[i];
        if (k == 0 && r == 0) {
            const auto d = detail::spray_data<double>(m->tapes(), x, v);
            for (int i = 0; i < n; ++i) ds[n + i] = -d.G[i];
            return;
        }
        const auto c = detail::conn_data<double>(m->tapes(), x, v);
        for (int i = 0; i < n; ++i) ds[n + i] = -c.G[i];
        for (int a = 0; a < k; ++a) {
            const double* X = s.data() + 2 * n + 2 * a * n;
            const double* Y = X + n;
            double* dX = ds.data() + 2 * n + 2 * a * n;
            double* dY = dX + n;
            for (int i = 0; i < n; ++i) {
                dX[i] = Y[i];
                double acc = 0.0;
                for (int j = 0; j < n; ++j) acc -= c.dGx[i * n + j] * X[j] + c.dGv[i * n + j] * Y[j];
                dY[i] = acc;
            }
        }
        for (int b = 0; b < r; ++b) {
            const double* W = s.data() + 2 * n + 2 * k * n + b * n;
            double* dW = ds.data() + 2 * n + 2 * k * n + b * n;
            for (int i = 0; i < n; ++i) {
                double acc = 0.0;
                for (int j = 0; j < n; ++j) acc -= c.N[i * n + j] * W[j];
                dW[i] = acc;
            }
        }
    }
};

using Stepper = odeint::controlled_runge_kutta<odeint::runge_kutta_dopri5<State>>;

/// Adaptive DOPRI5 from t to `target`, calling `accept(t, s)` after every
/// accepted step; the last step lands on `target` exactly.
template <class Accept>
void drive(const FlowSystem& sys, Stepper& stepper, State& s, double& t, double target, double& dt,
           const OdeOptions& opt, long& steps, Accept&& accept) {
    if (t == target) return;
    const double sign = target > t ? 1.0 : -1.0;
    const ModelSpec& m = *sys.m;
    const int n = sys.n;
    if (dt == 0.0 || dt * sign < 0.0) dt = sign * std::min(1e-2, std::abs(target - t));
    while (sign * (target - t) > 0.0) {
        if (++steps > opt.max_steps) throw StepFailure(t, "step budget exhausted at t=" + std::to_string(t));
        if (std::abs(dt) > opt.max_step) dt = sign * opt.max_step;
        bool last = false;
        if (sign * (t + dt - target) >= 0.0) {
            dt = target - t;
            last = true;
        }
        const State saved = s;
        const double t_saved = t, dt_tried = dt;
        odeint::controlled_step_result res;
        try {
            res = stepper.try_step(sys, s, t, dt);
        } catch (const DomainError&) {
            res = odeint::fail;
        } catch (const SignatureError&) {
            res = odeint::fail;
        }
        if (res == odeint::fail) {
            s = saved;
            t = t_saved;
            stepper.reset();
            dt = 0.5 * dt_tried;
            if (std::abs(dt) < opt.min_step)
                throw StepFailure(t, "step size underflow at t=" + std::to_string(t) + " near x=" +
                                         describe(Eigen::Map<const Vec>(s.data(), n)));
            continue;
        }
        if (!m.in_domain(std::span<const double>(s.data(), n), std::span<const double>(s.data() + n, n))) {
            s = saved;
            t = t_saved;
            stepper.reset();
            dt = 0.5 * dt_tried;
            if (std::abs(dt) < opt.min_step)
                throw LeftDomain(t, "geodesic leaves the domain of model '" + m.name() + "' at t=" +
                                        std::to_string(t));
            continue;
        }
        if (last) t = target;
        accept(t, s);
    }
}

GeodesicSample make_sample(const ModelSpec& m, double t, const double* x, const double* v) {
    const int n = m.n();
    const auto c = detail::conn_data<double>(m.tapes(), std::span<const double>(x, n), std::span<const double>(v, n));
    GeodesicSample g;
    g.t = t;
    g.x = Eigen::Map<const Vec>(x, n);
    g.v = Eigen::Map<const Vec>(v, n);
    g.a.resize(n);
    g.j.resize(n);
    for (int i = 0; i < n; ++i) g.a[i] = -c.G[i];
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int k = 0; k < n; ++k) acc -= c.dGx[i * n + k] * g.v[k] + c.dGv[i * n + k] * g.a[k];
        g.j[i] = acc;
    }
    return g;
}

/// Quintic Hermite basis on s ∈ [0, 1] and its first two derivatives.
struct Hermite5 {
    double h[6], d[6], dd[6];
    explicit Hermite5(double s) {
        const double s2 = s * s, s3 = s2 * s, s4 = s3 * s, s5 = s4 * s;
        h[0] = 1 - 10 * s3 + 15 * s4 - 6 * s5;
        h[1] = s - 6 * s3 + 8 * s4 - 3 * s5;
        h[2] = 0.5 * s2 - 1.5 * s3 + 1.5 * s4 - 0.5 * s5;
        h[3] = 0.5 * s3 - s4 + 0.5 * s5;
        h[4] = -4 * s3 + 7 * s4 - 3 * s5;
        h[5] = 10 * s3 - 15 * s4 + 6 * s5;
        d[0] = -30 * s2 + 60 * s3 - 30 * s4;
        d[1] = 1 - 18 * s2 + 32 * s3 - 15 * s4;
        d[2] = s - 4.5 * s2 + 6 * s3 - 2.5 * s4;
        d[3] = 1.5 * s2 - 4 * s3 + 2.5 * s4;
        d[4] = -12 * s2 + 28 * s3 - 15 * s4;
        d[5] = 30 * s2 - 60 * s3 + 30 * s4;
        dd[0] = -60 * s + 180 * s2 - 120 * s3;
        dd[1] = -36 * s + 96 * s2 - 60 * s3;
        dd[2] = 1 - 9 * s + 18 * s2 - 10 * s3;
        dd[3] = 3 * s - 12 * s2 + 10 * s3;
        dd[4] = -24 * s + 84 * s2 - 60 * s3;
        dd[5] = 60 * s - 180 * s2 + 120 * s3;
    }
};

Vec hermite(const double (&w)[6], double h, const Vec& p0, const Vec& d0, const Vec& dd0, const Vec& p1,
            const Vec& d1, const Vec& dd1) {
    return w[0] * p0 + h * w[1] * d0 + h * h * w[2] * dd0 + h * h * w[3] * dd1 + h * w[4] * d1 + w[5] * p1;
}

}  // namespace

// ─── Geodesic paths ───────────────────────────────────────────────────────────

GeodesicPath::GeodesicPath(ModelSpec m, std::vector<GeodesicSample> samples, bool unit_speed)
    : model_(std::move(m)), samples_(std::move(samples)), unit_speed_(unit_speed) {
    if (samples_.empty()) throw Error("geodesic path without samples");
}

std::size_t GeodesicPath::interval(double t) const {
    const double span = t_max() - t_min();
    if (t < t_min() - 1e-12 * (1.0 + span) || t > t_max() + 1e-12 * (1.0 + span))
        throw Error("time " + std::to_string(t) + " outside the path interval [" + std::to_string(t_min()) + ", " +
                    std::to_string(t_max()) + "]");
    if (samples_.size() == 1) return 0;
    auto it = std::upper_bound(samples_.begin(), samples_.end(), t,
                               [](double a, const GeodesicSample& s) { return a < s.t; });
    std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - samples_.begin() - 1));
    return std::min(i, samples_.size() - 2);
}

Vec GeodesicPath::position(double t) const {
    if (samples_.size() == 1) return samples_[0].x;
    const std::size_t i = interval(t);
    const auto &a = samples_[i], &b = samples_[i + 1];
    const double h = b.t - a.t;
    const Hermite5 w((t - a.t) / h);
    return hermite(w.h, h, a.x, a.v, a.a, b.x, b.v, b.a);
}

Vec GeodesicPath::velocity(double t) const {
    if (samples_.size() == 1) return samples_[0].v;
    const std::size_t i = interval(t);
    const auto &a = samples_[i], &b = samples_[i + 1];
    const double h = b.t - a.t;
    const Hermite5 w((t - a.t) / h);
    return hermite(w.h, h, a.v, a.a, a.j, b.v, b.a, b.j);
}

Vec GeodesicPath::acceleration(double t) const {
    if (samples_.size() == 1) return samples_[0].a;
    const std::size_t i = interval(t);
    const auto &a = samples_[i], &b = samples_[i + 1];
    const double h = b.t - a.t;
    const Hermite5 w((t - a.t) / h);
    return hermite(w.d, h, a.v, a.a, a.j, b.v, b.a, b.j) / h;
}

double GeodesicPath::lagrangian_drift() const {
    const double L0 = model_.lagrangian_at(span_of(samples_[0].x), span_of(samples_[0].v));
    double worst = 0.0;
    for (const auto& s : samples_)
        worst = std::max(worst, std::abs(model_.lagrangian_at(span_of(s.x), span_of(s.v)) - L0));
    return worst;
}

double GeodesicPath::max_residual() const {
    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < samples_.size(); ++i) {
        const double t = 0.5 * (samples_[i].t + samples_[i + 1].t);
        const Vec x = position(t), v = velocity(t);
        const auto d = detail::spray_data<double>(model_.tapes(), span_of(x), span_of(v));
        worst = std::max(worst, (acceleration(t) + to_vec(d.G)).norm());
    }
    return worst;
}

GeodesicPath integrate_geodesic(const ModelSpec& m, const Vec& x, const Vec& v, double t_lo, double t_hi,
                                const OdeOptions& opt) {
    const int n = m.n();
    if (x.size() != n || v.size() != n) throw Error("dimension mismatch in geodesic initial data");
    if (v.isZero(0.0)) throw Error("geodesic initial velocity is zero");
    if (!m.in_domain(span_of(x), span_of(v)))
        throw DomainError("geodesic initial data outside the domain of model '" + m.name() + "'");
    if (t_lo > 0.0 || t_hi < 0.0) throw Error("geodesic time span must contain 0");
    const FlowSystem sys{&m, n, 0, 0};
    State s0(2 * n);
    for (int i = 0; i < n; ++i) {
        s0[i] = x[i];
        s0[n + i] = v[i];
    }
    std::vector<GeodesicSample> fwd{make_sample(m, 0.0, s0.data(), s0.data() + n)}, bwd;
    for (int dir : {1, -1}) {
        const double target = dir > 0 ? t_hi : t_lo;
        if (target == 0.0) continue;
        Stepper stepper(odeint::default_error_checker<double, odeint::range_algebra, odeint::default_operations>(
            opt.abs_tol, opt.rel_tol));
        State s = s0;
        double t = 0.0, dt = 0.0;
        long steps = 0;
        auto& out = dir > 0 ? fwd : bwd;
        drive(sys, stepper, s, t, target, dt, opt, steps,
              [&](double tt, const State& st) { out.push_back(make_sample(m, tt, st.data(), st.data() + n)); });
    }
    std::vector<GeodesicSample> all(bwd.rbegin(), bwd.rend());
    all.insert(all.end(), fwd.begin(), fwd.end());
    const double L = m.lagrangian_at(span_of(x), span_of(v));
    const bool unit = L < 0.0 && std::abs(std::sqrt(-2.0 * L) - 1.0) <= 1e-9;
    return GeodesicPath(m, std::move(all), unit);
}

Vec exp_map(const ModelSpec& m, const Vec& x, const Vec& v, const OdeOptions& opt) {
    return integrate_geodesic(m, x, v, 0.0, 1.0, opt).samples().back().x;
}

// ─── Variational flow ─────────────────────────────────────────────────────────

std::vector<FlowState> integrate_flow(const ModelSpec& m, const FlowState& start, const std::vector<double>& times,
                                      const OdeOptions& opt) {
    const int n = m.n();
    const int k = static_cast<int>(start.X.size()), r = static_cast<int>(start.W.size());
    if (static_cast<int>(start.Y.size()) != k) throw Error("flow state needs as many Y as X columns");
    const FlowSystem sys{&m, n, k, r};
    State s0(2 * n + 2 * k * n + r * n);
    auto pack = [&](State& s, const FlowState& f) {
        for (int i = 0; i < n; ++i) {
            s[i] = f.x[i];
            s[n + i] = f.v[i];
        }
        for (int a = 0; a < k; ++a)
            for (int i = 0; i < n; ++i) {
                s[2 * n + 2 * a * n + i] = f.X[a][i];
                s[2 * n + 2 * a * n + n + i] = f.Y[a][i];
            }
        for (int b = 0; b < r; ++b)
            for (int i = 0; i < n; ++i) s[2 * n + 2 * k * n + b * n + i] = f.W[b][i];
    };
    auto unpack = [&](const State& s) {
        FlowState f;
        f.x = Eigen::Map<const Vec>(s.data(), n);
        f.v = Eigen::Map<const Vec>(s.data() + n, n);
        for (int a = 0; a < k; ++a) {
            f.X.push_back(Eigen::Map<const Vec>(s.data() + 2 * n + 2 * a * n, n));
            f.Y.push_back(Eigen::Map<const Vec>(s.data() + 2 * n + 2 * a * n + n, n));
        }
        for (int b = 0; b < r; ++b) f.W.push_back(Eigen::Map<const Vec>(s.data() + 2 * n + 2 * k * n + b * n, n));
        return f;
    };
    pack(s0, start);
    std::vector<FlowState> out(times.size());
    std::vector<std::size_t> order(times.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (int dir : {1, -1}) {
        std::vector<std::size_t> idx;
        for (std::size_t i : order)
            if ((dir > 0 && times[i] >= 0.0) || (dir < 0 && times[i] < 0.0)) idx.push_back(i);
        std::sort(idx.begin(), idx.end(),
                  [&](std::size_t a, std::size_t b) { return dir > 0 ? times[a] < times[b] : times[a] > times[b]; });
        Stepper stepper(odeint::default_error_checker<double, odeint::range_algebra, odeint::default_operations>(
            opt.abs_tol, opt.rel_tol));
        State s = s0;
        double t = 0.0, dt = 0.0;
        long steps = 0;
        for (std::size_t i : idx) {
            drive(sys, stepper, s, t, times[i], dt, opt, steps, [](double, const State&) {});
            out[i] = unpack(s);
        }
    }
    return out;
}

// ─── Parallel transport ───────────────────────────────────────────────────────

TransportedField parallel_transport(const GeodesicPath& path, const Vec& w0, const OdeOptions& opt) {
    const ModelSpec& m = path.model();
    const auto& samples = path.samples();
    auto zero = std::find_if(samples.begin(), samples.end(), [](const GeodesicSample& s) { return s.t == 0.0; });
    if (zero == samples.end()) throw Error("parallel transport needs a path through t = 0");
    FlowState start;
    start.x = zero->x;
    start.v = zero->v;
    start.W = {w0};
    std::vector<double> ts;
    for (const auto& s : samples) ts.push_back(s.t);
    const auto states = integrate_flow(m, start, ts, opt);
    TransportedField f;
    f.t = ts;
    for (const auto& s : states) {
        f.x.push_back(s.x);
        f.velocity.push_back(s.v);
        f.W.push_back(s.W[0]);
    }
    return f;
}

// ─── Jacobi frames ────────────────────────────────────────────────────────────

JacobiFrame::JacobiFrame(ModelSpec m, Expr h, Vec x, OdeOptions opt)
    : model_(std::move(m)), h_(h), x_(std::move(x)), opt_(opt) {
    const FieldAnalysis a = analyze_field(model_, differential_of(h_, model_.n(), 1.0), x_);
    grad_ = a.V;
    hess_ = a.H;
    e_ = orthonormal_frame(a.g, a.V);
}

FrameAt JacobiFrame::assemble(double t, const FlowState& s) const {
    const int n = model_.n();
    const ConnectionAt c = spray_and_connections(model_, s.x, s.v);
    FrameAt f;
    f.t = t;
    f.x = s.x;
    f.velocity = s.v;
    f.E.resize(n, n);
    f.DE.resize(n, n);
    for (int i = 0; i < n; ++i) {
        f.E.col(i) = s.X[i];
        f.DE.col(i) = s.Y[i] + c.nconn * s.X[i];
    }
    Eigen::JacobiSVD<Mat> svd(f.E);
    const Vec sv = svd.singularValues();
    if (sv[n - 1] <= 0.0 || sv[0] / sv[n - 1] > 1e12)
        throw FrameSingular("Jacobi frame degenerates at t=" + std::to_string(t));
    f.A = f.E.transpose() * c.g * f.E;
    f.B = f.E.partialPivLu().solve(f.DE).transpose();
    return f;
}

std::vector<FrameAt> JacobiFrame::at(const std::vector<double>& ts) const {
    const int n = model_.n();
    FlowState start;
    start.x = x_;
    start.v = grad_;
    const ConnectionAt c = spray_and_connections(model_, x_, grad_);
    for (int i = 0; i < n; ++i) {
        start.X.push_back(e_.col(i));
        start.Y.push_back((hess_ - c.nconn) * e_.col(i));
    }
    const auto states = integrate_flow(model_, start, ts, opt_);
    std::vector<FrameAt> out;
    for (std::size_t i = 0; i < ts.size(); ++i) out.push_back(assemble(ts[i], states[i]));
    return out;
}

FrameAt JacobiFrame::at(double t) const { return at(std::vector<double>{t}).front(); }

double trace_b_derivative(const JacobiFrame& frame, double t, double step) {
    const auto f = frame.at({t - 2 * step, t - step, t + step, t + 2 * step});
    return (f[0].B.trace() - 8.0 * f[1].B.trace() + 8.0 * f[2].B.trace() - f[3].B.trace()) / (12.0 * step);
}

std::vector<double> riccati_residuals(const JacobiFrame& frame, const std::vector<double>& ts, double step) {
    std::vector<double> all;
    for (double t : ts)
        for (double o : {0.0, -2.0, -1.0, 1.0, 2.0}) all.push_back(t + o * step);
    const auto f = frame.at(all);
    std::vector<double> out;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const FrameAt* g = &f[5 * i];
        const double dtr =
            (g[1].B.trace() - 8.0 * g[2].B.trace() + 8.0 * g[3].B.trace() - g[4].B.trace()) / (12.0 * step);
        const double ric = curvature_and_ricci(frame.model(), g[0].x, g[0].velocity).ricci;
        out.push_back(std::abs(dtr + (g[0].B * g[0].B).trace() + ric));
    }
    return out;
}

double riccati_residual(const JacobiFrame& frame, double t, double step) {
    return riccati_residuals(frame, {t}, step).front();
}

// ─── Connection and time separation ───────────────────────────────────────────

Connection connect_points(const ModelSpec& m, const Vec& x, const Vec& y, const OdeOptions& opt) {
    const int n = m.n();
    Connection best;
    const Vec d = y - x;
    if (d.norm() == 0.0) {
        best.diagnostic = "x and y coincide";
        return best;
    }
    const Vec X = to_vec(m.orientation_at(span_of(x)));
    const Vec Xs = X * (d.norm() / X.norm());
    std::vector<Vec> seeds{d, 0.75 * d + 0.25 * Xs, 0.5 * d + 0.5 * Xs, Xs};
    std::ostringstream diag;
    for (std::size_t si = 0; si < seeds.size(); ++si) {
        Vec v = seeds[si];
        auto shoot = [&](const Vec& w, Mat* J) {
            FlowState start;
            start.x = x;
            start.v = w;
            for (int k = 0; k < n; ++k) {
                start.X.push_back(Vec::Zero(n));
                start.Y.push_back(Vec::Unit(n, k));
            }
            const FlowState end = integrate_flow(m, start, {1.0}, opt).front();
            if (J) {
                J->resize(n, n);
                for (int k = 0; k < n; ++k) J->col(k) = end.X[k];
            }
            return Vec(end.x - y);
        };
        bool converged = false;
        try {
            if (!m.in_domain(span_of(x), span_of(v))) throw DomainError("seed outside domain");
            Mat J;
            Vec res = shoot(v, &J);
            for (int it = 0; it < 40 && !converged; ++it) {
                if (res.norm() <= 1e-11 * (1.0 + y.norm())) {
                    converged = true;
                    break;
                }
                const Vec step = J.partialPivLu().solve(res);
                double lambda = 1.0;
                bool accepted = false;
                while (lambda > 1e-6) {
                    const Vec trial = v - lambda * step;
                    try {
                        if (m.in_domain(span_of(x), span_of(trial))) {
                            Mat Jt;
                            const Vec rt = shoot(trial, &Jt);
                            if (rt.norm() < res.norm()) {
                                v = trial;
                                res = rt;
                                J = Jt;
                                accepted = true;
                                break;
                            }
                        }
                    } catch (const LeftDomain&) {
                    } catch (const StepFailure&) {
                    }
                    lambda *= 0.5;
                }
                if (!accepted) break;
            }
            if (!converged && res.norm() <= 1e-11 * (1.0 + y.norm())) converged = true;
        } catch (const Error& e) {
            diag << "seed " << si << ": " << e.what() << "; ";
            continue;
        }
        if (!converged) {
            diag << "seed " << si << ": no convergence; ";
            continue;
        }
        CausalInfo c;
        try {
            c = classify_causal(m, x, v);
        } catch (const Error& e) {
            diag << "seed " << si << ": " << e.what() << "; ";
            continue;
        }
        if (c.cls == CausalClass::Spacelike || c.cls == CausalClass::Zero || c.orientation != TimeOrientation::Future) {
            diag << "seed " << si << ": converged to a non-future-causal geodesic; ";
            continue;
        }
        ++best.converged_seeds;
        const double len = c.F.value_or(0.0);
        if (!best.connected || len > best.length + 1e-10) {
            best.connected = true;
            best.velocity = v;
            best.length = len;
        }
    }
    if (best.connected) {
        best.path = integrate_geodesic(m, x, best.velocity, 0.0, 1.0, opt);
    } else {
        best.diagnostic = diag.str();
    }
    return best;
}

double product_fiber_distance(const ModelSpec& m, double y0, double y1) {
    if (m.n() != 2) throw Error("product fiber distance needs a two-dimensional model");
    auto density = [&](double y) {
        const double x[2] = {0.0, y}, v[2] = {0.0, 1.0};
        return std::sqrt(2.0 * m.lagrangian_at(x, v));
    };
    const double lo = std::min(y0, y1), hi = std::max(y0, y1);
    if (lo == hi) return 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(density, lo, hi, 10, 1e-12);
}

namespace {

/// True when g = −dt² ⊕ h(x₂) at the given points, which licenses the product formula.
bool product_structure(const ModelSpec& m, const Vec& x) {
    if (m.n() != 2) return false;
    const Vec e1 = Vec::Unit(2, 0), e2 = Vec::Unit(2, 1);
    const MetricAt g = fundamental_tensor(m, x, e1 + 0.1 * e2);
    return std::abs(g.g(0, 0) + 1.0) <= 1e-12 && std::abs(g.g(0, 1)) <= 1e-12;
}

}  // namespace

Expr flat_separation_expr(const ModelSpec& m, const Vec& z) {
    if (!m.position_independent()) throw PreconditionFailure("flat_separation_expr needs a position-independent L");
    std::map<Variable, Expr> subs;
    for (int i = 0; i < m.n(); ++i) subs[vvar(i)] = Expr::variable(xvar(i)) - Expr::constant(z[i]);
    return sqrt(-2.0 * substitute(m.lagrangian(), subs));
}

Separation time_separation(const ModelSpec& m, const Vec& x, const Vec& y) {
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();
    Separation s;
    const Vec d = y - x;
    if (m.family() == Family::Minkowski || m.family() == Family::Flat || m.position_independent()) {
        s.method = "flat closed form";
        if (d.isZero(0.0)) {
            s.tau = 0.0;
            return s;
        }
        try {
            const CausalInfo c = classify_causal(m, x, d);
            if (c.orientation == TimeOrientation::Future && c.cls != CausalClass::Spacelike) {
                s.tau = c.F.value_or(0.0);
                s.chronological = c.cls == CausalClass::Timelike;
                return s;
            }
        } catch (const DomainError&) {
        }
        s.tau = kNegInf;
        return s;
    }
    if (m.family() == Family::Product && product_structure(m, x) && product_structure(m, y)) {
        s.method = "product closed form";
        const double dt = d[0];
        const double ds = product_fiber_distance(m, x[1], y[1]);
        if (dt > 0.0 && dt >= ds) {
            s.tau = std::sqrt((dt - ds) * (dt + ds));
            s.chronological = dt > ds;
        } else if (d.isZero(0.0)) {
            s.tau = 0.0;
        } else {
            s.tau = kNegInf;
        }
        return s;
    }
    s.method = "shooting";
    if (d.isZero(0.0)) {
        s.tau = 0.0;
        return s;
    }
    const Connection c = connect_points(m, x, y);
    if (c.connected) {
        s.tau = c.length;
        s.chronological = c.length > 0.0;
    } else {
        s.tau = kNegInf;
        s.method += " (no connection: " + c.diagnostic + ")";
    }
    return s;
}

}  // namespace lfg
