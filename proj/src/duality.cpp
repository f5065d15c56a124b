/// @file duality.cpp
/// @brief Legendre transform, field operators on jets, p-Hamiltonian, ellipticity and p-energy.
#include "lfg/duality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "lfg/detail/pointwise.hpp"
#include "lfg/errors.hpp"

namespace lfg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string describe(const Vec& a) {
    std::ostringstream os;
    os.precision(10);
    os << "(";
    for (int i = 0; i < a.size(); ++i) os << (i ? ", " : "") << a[i];
    os << ")";
    return os.str();
}

Mat to_mat(int n, const std::vector<double>& a) {
    Mat r(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) r(i, j) = a[i * n + j];
    return r;
}

double residual(const ModelSpec& m, const Vec& x, const Vec& v, const Vec& omega, Vec* step) {
    const auto d = detail::basic_data<double>(m.tapes(), span_of(x), span_of(v));
    const Vec r = to_vec(d.p) - omega;
    if (step) *step = to_mat(m.n(), d.g).partialPivLu().solve(r);
    return r.norm();
}

/// Damped Newton on ∂L/∂v(v) = ω.
Vec legendre_solve(const ModelSpec& m, const Vec& x, const Vec& omega, int* iterations) {
    const int n = m.n();
    if (omega.size() != n) throw Error("covector dimension mismatch");
    if (!omega.allFinite() || omega.isZero(0.0))
        throw NotInPolarCone("covector " + describe(omega) + " is not in the open polar cone");
    const Vec X = to_vec(m.orientation_at(span_of(x)));
    Vec v;
    if (m.in_domain(span_of(x), span_of(X))) {
        const auto d = detail::basic_data<double>(m.tapes(), span_of(x), span_of(X));
        v = to_mat(n, d.g).partialPivLu().solve(omega);
        if (!is_future_timelike(m, x, v)) v = -v;
    }
    if (v.size() != n || !is_future_timelike(m, x, v)) v = X * (omega.norm() / X.norm());
    const double tol = 1e-14 * (1.0 + omega.norm());
    Vec step;
    double res = residual(m, x, v, omega, &step);
    int k = 0;
    for (; k < 100 && res > tol; ++k) {
        double lambda = 1.0;
        bool accepted = false;
        while (lambda > 1e-12) {
            const Vec trial = v - lambda * step;
            if (m.in_domain(span_of(x), span_of(trial))) {
                Vec trial_step;
                const double r = residual(m, x, trial, omega, &trial_step);
                if (r < res) {
                    v = trial;
                    res = r;
                    step = trial_step;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if (!accepted) break;
    }
    if (iterations) *iterations = k;
    if (res > 1e-9 * (1.0 + omega.norm()))
        throw NotInPolarCone("Legendre solve for " + describe(omega) + " did not converge (residual " +
                             std::to_string(res) + ")");
    if (!is_future_timelike(m, x, v))
        throw NotInPolarCone("Legendre solve for " + describe(omega) + " ended at a non-future-timelike vector " +
                             describe(v));
    return v;
}

}  // namespace

// ─── Legendre transform ───────────────────────────────────────────────────────

DualAt legendre_transform(const ModelSpec& m, const Vec& x, const Vec& omega) {
    DualAt r;
    r.base = x;
    r.omega = omega;
    r.legendre = legendre_solve(m, x, omega, &r.iterations);
    const MetricAt g = fundamental_tensor(m, x, r.legendre);
    r.L_star = g.L;
    r.F_star = std::sqrt(-2.0 * g.L);
    r.gstar = g.g_inv;
    return r;
}

namespace {

/// ℒ*(ω) on covector jets (order `ord`) at fixed x.
std::vector<Jet> legendre_in_omega(const ModelSpec& m, const Vec& x, const Vec& omega, const Vec& V0, int ord) {
    const int n = m.n();
    std::vector<Jet> xj(n), om(n), V(n);
    for (int i = 0; i < n; ++i) {
        xj[i] = Jet(x[i]);
        om[i] = Jet::variable(omega[i], i, n, ord);
        V[i] = Jet(V0[i]);
    }
    for (int it = 0; it < 3; ++it) {
        const auto d = detail::basic_data<Jet>(m.tapes(), xj, V);
        const auto ginv = detail::inverse<Jet>(n, d.g);
        std::vector<Jet> r(n);
        for (int i = 0; i < n; ++i) r[i] = d.p[i] - om[i];
        const auto step = detail::mat_vec<Jet>(n, ginv, r);
        for (int i = 0; i < n; ++i) V[i] = V[i] - step[i];
    }
    return V;
}

}  // namespace

Tensor3 dual_metric_derivative(const ModelSpec& m, const Vec& x, const Vec& omega) {
    const int n = m.n();
    const Vec V0 = legendre_solve(m, x, omega, nullptr);
    const std::vector<Jet> V = legendre_in_omega(m, x, omega, V0, 1);
    std::vector<Jet> xj(n);
    for (int i = 0; i < n; ++i) xj[i] = Jet(x[i]);
    const auto d = detail::basic_data<Jet>(m.tapes(), xj, V);
    const auto gstar = detail::inverse<Jet>(n, d.g);
    Tensor3 t(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) t(i, j, k) = gstar[i * n + j].d(k);
    return t;
}

double reverse_cauchy_schwarz_check(const ModelSpec& m, const Vec& x, const Vec& v, const Vec& omega) {
    const CausalInfo c = classify_causal(m, x, v);
    if (c.cls == CausalClass::Spacelike || c.cls == CausalClass::Zero || c.orientation != TimeOrientation::Future)
        throw NotTemporal("reverse Cauchy-Schwarz needs a future causal vector");
    const DualAt d = legendre_transform(m, x, omega);
    return -omega.dot(v) - d.F_star * c.F.value_or(0.0);
}

double proportionality_defect(const Vec& a, const Vec& b) {
    double worst = 0.0;
    for (int i = 0; i < a.size(); ++i)
        for (int j = i + 1; j < a.size(); ++j) worst = std::max(worst, std::abs(a[i] * b[j] - a[j] * b[i]));
    return worst / (a.norm() * b.norm());
}

// ─── Fields ───────────────────────────────────────────────────────────────────

CovectorField differential_of(Expr f, int n, double sign) {
    std::vector<Expr> df;
    for (int i = 0; i < n; ++i) df.push_back(differentiate(f, xvar(i)));
    auto tape = std::make_shared<const Tape>(df);
    return [tape, sign, n](std::span<const Jet> x) {
        thread_local std::vector<Jet> work;
        std::vector<Jet> out(n), zero(n, Jet(0.0));
        tape->eval<Jet>(x, std::span<const Jet>(zero), out, work);
        for (Jet& o : out) o = sign * o;
        return out;
    };
}

namespace {

struct JetField {
    std::vector<Jet> x, omega, V;
    detail::BasicData<Jet> basic;
};

/// ℒ*(ω(x)) on order-2 position jets: a double solve, then Newton in jets.
JetField legendre_jets(const ModelSpec& m, const CovectorField& omega, const Vec& x0) {
    const int n = m.n();
    JetField jf;
    jf.x.resize(n);
    for (int i = 0; i < n; ++i) jf.x[i] = Jet::variable(x0[i], i, n, 2);
    jf.omega = omega(jf.x);
    Vec w0(n);
    for (int i = 0; i < n; ++i) w0[i] = jf.omega[i].value();
    Vec V0;
    try {
        V0 = legendre_solve(m, x0, w0, nullptr);
    } catch (const NotInPolarCone& e) {
        throw NotTemporal(std::string("covector field is not in the polar cone at x=") + describe(x0) + ": " +
                          e.what());
    }
    jf.V.resize(n);
    for (int i = 0; i < n; ++i) jf.V[i] = Jet(V0[i]);
    for (int it = 0; it < 3; ++it) {
        const auto d = detail::basic_data<Jet>(m.tapes(), jf.x, jf.V);
        const auto ginv = detail::inverse<Jet>(n, d.g);
        std::vector<Jet> r(n);
        for (int i = 0; i < n; ++i) r[i] = d.p[i] - jf.omega[i];
        const auto step = detail::mat_vec<Jet>(n, ginv, r);
        for (int i = 0; i < n; ++i) jf.V[i] = jf.V[i] - step[i];
    }
    jf.basic = detail::basic_data<Jet>(m.tapes(), jf.x, jf.V);
    return jf;
}

}  // namespace

FieldAnalysis analyze_field(const ModelSpec& m, const CovectorField& omega, const Vec& x, double p) {
    const int n = m.n();
    const JetField jf = legendre_jets(m, omega, x);
    FieldAnalysis a;
    a.base = x;
    a.p = p;
    a.omega.resize(n);
    a.V.resize(n);
    for (int i = 0; i < n; ++i) {
        a.omega[i] = jf.omega[i].value();
        a.V[i] = jf.V[i].value();
    }
    const Jet u = -jf.basic.L;
    const Jet F = sqrt(2.0 * u);
    a.F = F.value();

    // Hessian H = ∂V + N(V).
    const ConnectionAt con = spray_and_connections(m, x, a.V);
    a.g = con.g;
    a.H.resize(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a.H(i, j) = jf.V[i].d(j) + con.nconn(i, j);
    a.box = a.H.trace();

    const detail::PsiAlong psi = detail::psi_along(m.tapes(), span_of(x), span_of(a.V));
    a.psi = psi.psi;
    a.dpsi = psi.dpsi;
    a.ddpsi = psi.ddpsi;
    a.box_m = a.box - a.dpsi;

    // ∂Φ for m = e^Φ dx.
    thread_local std::vector<Jet> work;
    std::vector<Jet> w(m.tapes().weight.outputs()), zero(n, Jet(0.0));
    m.tapes().weight.eval<Jet>(jf.x, std::span<const Jet>(zero), w, work);
    auto div_m = [&](const std::vector<Jet>& Y) {
        Jet s(0.0);
        for (int i = 0; i < n; ++i) s = s + Y[i].derivative(i) + Y[i] * w[1 + i];
        return s;
    };

    const Jet divV = div_m(jf.V);
    a.box_m_div = divV.value();
    a.grad_box_m.resize(n);
    for (int k = 0; k < n; ++k) a.grad_box_m[k] = divV.d(k);

    const Jet scale = pow(F, p - 2.0);
    std::vector<Jet> W(n);
    for (int i = 0; i < n; ++i) W[i] = scale * jf.V[i];
    a.box_mp = div_m(W).value();
    const Vec HV = a.H * a.V;
    a.box_mp_expanded = std::pow(a.F, p - 2.0) * (a.box_m - (p - 2.0) * HV.dot(a.g * a.V) / (a.F * a.F));

    // Bochner terms.
    a.du.resize(n);
    for (int k = 0; k < n; ++k) a.du[k] = u.d(k);
    const auto ginv = detail::inverse<Jet>(n, jf.basic.g);
    std::vector<Jet> Y(n, Jet(0.0));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) Y[i] = Y[i] + ginv[i * n + j] * u.derivative(j);
    a.term_div = div_m(Y).value();
    a.term_dbox = a.grad_box_m.dot(a.V);
    a.ricci = curvature_and_ricci(m, x, a.V).ricci;
    a.term_ric = a.ricci + a.ddpsi;
    a.term_hs = (a.H * a.H).trace();
    return a;
}

OperatorAt gradient(const ModelSpec& m, Expr f, const Vec& x) {
    const int n = m.n();
    OperatorAt r;
    r.base = x;
    const std::vector<double> zero(n, 0.0);
    r.f_value = (*compiled(f))(span_of(x), zero)[0];
    Vec omega(n);
    for (int i = 0; i < n; ++i) omega[i] = -(*compiled(differentiate(f, xvar(i))))(span_of(x), zero)[0];
    try {
        r.grad = legendre_solve(m, x, omega, nullptr);
    } catch (const NotInPolarCone& e) {
        throw NotTemporal(std::string("-df is not in the polar cone at x=") + describe(x) + ": " + e.what());
    }
    r.F_star = std::sqrt(-2.0 * m.lagrangian_at(span_of(x), span_of(r.grad)));
    return r;
}

OperatorAt hessian_and_dalembertian(const ModelSpec& m, Expr f, const Vec& x, double p) {
    OperatorAt r = gradient(m, f, x);
    const FieldAnalysis a = analyze_field(m, differential_of(f, m.n(), -1.0), x, p);
    r.grad = a.V;
    r.F_star = a.F;
    r.hess = a.H;
    r.box = a.box;
    r.box_m = a.box_m;
    r.box_m_div = a.box_m_div;
    r.box_mp = a.box_mp;
    r.box_mp_expanded = a.box_mp_expanded;
    r.p = p;
    return r;
}

// ─── q-Lagrangian and p-Hamiltonian ───────────────────────────────────────────

double q_lagrangian(const ModelSpec& m, const Vec& x, const Vec& v, double q) {
    try {
        const CausalInfo c = classify_causal(m, x, v);
        if (c.cls == CausalClass::Zero) return 0.0;
        if (c.cls == CausalClass::Spacelike || c.orientation != TimeOrientation::Future) return kInf;
        return -std::pow(*c.F, q) / q;
    } catch (const DomainError&) {
        return kInf;
    }
}

double p_hamiltonian(const ModelSpec& m, const Vec& x, const Vec& omega, double p) {
    try {
        const Vec v = legendre_solve(m, x, omega, nullptr);
        const double F = std::sqrt(-2.0 * m.lagrangian_at(span_of(x), span_of(v)));
        return -std::pow(F, p) / p;
    } catch (const NotInPolarCone&) {
        return kInf;
    }
}

QPair q_lagrangian_p_hamiltonian(const ModelSpec& m, const Vec& x, const Vec& v, const Vec& omega, double q) {
    if (!(q > 0.0 && q < 1.0)) throw OutOfEpsilonRange("q must lie in (0, 1)");
    const double p = q / (q - 1.0);
    return {q_lagrangian(m, x, v, q), p_hamiltonian(m, x, omega, p)};
}

// ─── Ellipticity ──────────────────────────────────────────────────────────────

Mat orthonormal_frame(const Mat& g, const Vec& V) {
    const int n = static_cast<int>(g.rows());
    const double F = std::sqrt(-V.dot(g * V));
    std::vector<Vec> e{V / F};
    std::vector<double> eps{-1.0};
    for (int k = 0; k < n && static_cast<int>(e.size()) < n; ++k) {
        Vec w = Vec::Unit(n, k);
        for (std::size_t j = 0; j < e.size(); ++j) w -= eps[j] * w.dot(g * e[j]) * e[j];
        const double q = w.dot(g * w);
        if (q <= 1e-8 * w.squaredNorm()) continue;
        e.push_back(w / std::sqrt(q));
        eps.push_back(1.0);
    }
    if (static_cast<int>(e.size()) != n) throw FrameSingular("could not complete a g-orthonormal frame");
    Mat E(n, n);
    for (int j = 0; j < n; ++j) E.col(j) = e[j];
    return E;
}

SymbolReport ellipticity_symbol(const ModelSpec& m, Expr f, const Vec& x, double p) {
    const int n = m.n();
    const OperatorAt grad = gradient(m, f, x);
    const std::vector<double> zero(n, 0.0);
    Vec omega(n);
    for (int i = 0; i < n; ++i) omega[i] = -(*compiled(differentiate(f, xvar(i))))(span_of(x), zero)[0];
    const std::vector<Jet> V = legendre_in_omega(m, x, omega, grad.grad, 1);
    std::vector<Jet> xj(n);
    for (int i = 0; i < n; ++i) xj[i] = Jet(x[i]);
    const auto d = detail::basic_data<Jet>(m.tapes(), xj, V);
    const Jet F = sqrt(-2.0 * d.L);
    const Jet scale = pow(F, p - 2.0);
    SymbolReport r;
    r.symbol.resize(n, n);
    for (int i = 0; i < n; ++i) {
        const Jet W = scale * V[i];
        for (int j = 0; j < n; ++j) r.symbol(i, j) = W.d(j);
    }
    const Mat g = fundamental_tensor(m, x, grad.grad).g;
    const Mat E = orthonormal_frame(g, grad.grad);
    const Mat Einv = E.inverse();
    r.normalized = Einv * r.symbol * Einv.transpose() / scale.value();
    Eigen::EigenSolver<Mat> es(r.normalized);
    r.eigenvalues = es.eigenvalues().real();
    std::sort(r.eigenvalues.data(), r.eigenvalues.data() + n, std::greater<>());
    return r;
}

// ─── p-energy ─────────────────────────────────────────────────────────────────

EnergyReport p_energy(const ModelSpec& m, Expr f, const Vec& lo, const Vec& hi, double p, int grid,
                      int max_depth) {
    const int n = m.n();
    std::vector<Expr> df;
    for (int i = 0; i < n; ++i) df.push_back(differentiate(f, xvar(i)));
    const std::vector<double> zero(n, 0.0);
    auto midpoint = [&](int N) {
        Vec h = (hi - lo) / N;
        double cell = h.prod();
        double sum = 0.0;
        std::vector<int> idx(n, 0);
        while (true) {
            Vec x(n);
            for (int i = 0; i < n; ++i) x[i] = lo[i] + (idx[i] + 0.5) * h[i];
            Vec omega(n);
            for (int i = 0; i < n; ++i) omega[i] = -(*compiled(df[i]))(span_of(x), zero)[0];
            const double H = p_hamiltonian(m, x, omega, p);
            if (!std::isfinite(H)) throw NotTemporal("f is not temporal at grid node x=" + describe(x));
            sum += H * m.weight_at(span_of(x));
            int k = 0;
            while (k < n && ++idx[k] == N) idx[k++] = 0;
            if (k == n) break;
        }
        return sum * cell;
    };
    EnergyReport r;
    int N = std::max(1, grid);
    double prev_mid = midpoint(N);
    double prev_ext = std::numeric_limits<double>::quiet_NaN();
    for (int depth = 0; depth < max_depth; ++depth) {
        N *= 2;
        const double mid = midpoint(N);
        const double ext = (4.0 * mid - prev_mid) / 3.0;
        r.value = ext;
        r.grid = N;
        if (std::isfinite(prev_ext)) {
            r.last_change = std::abs(ext - prev_ext);
            if (r.last_change <= 1e-6 * std::max(1e-300, std::abs(ext))) {
                r.converged = true;
                break;
            }
        }
        prev_mid = mid;
        prev_ext = ext;
    }
    return r;
}

}  // namespace lfg
