/// @file finsler.cpp
/// @brief Pointwise Lorentz–Finsler geometry from the compiled model tapes.
#include "lfg/finsler.hpp"

#include <algorithm>
#include <cmath>

#include "lfg/detail/pointwise.hpp"
#include "lfg/errors.hpp"
#include "lfg/sampling.hpp"

namespace lfg {

Mat Tensor3::slice(int i) const {
    Mat m(n, n);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) m(j, k) = (*this)(i, j, k);
    return m;
}

Vec to_vec(const std::vector<double>& v) {
    Vec r(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) r[static_cast<Eigen::Index>(i)] = v[i];
    return r;
}

namespace {

std::string describe(const Vec& x, const Vec& v) {
    std::string s = "x=(";
    for (int i = 0; i < x.size(); ++i) s += (i ? ", " : "") + std::to_string(x[i]);
    s += ") v=(";
    for (int i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
    return s + ")";
}

void require_domain(const ModelSpec& m, const Vec& x, const Vec& v) {
    if (x.size() != m.n() || v.size() != m.n()) throw Error("dimension mismatch");
    if (!m.in_domain(span_of(x), span_of(v)))
        throw DomainError("(x, v) outside the domain of model '" + m.name() + "': " + describe(x, v));
}

Mat to_mat(int n, const std::vector<double>& a) {
    Mat r(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) r(i, j) = a[i * n + j];
    return r;
}

}  // namespace

// ─── Metric ───────────────────────────────────────────────────────────────────

void check_signature(const Mat& g) {
    Eigen::SelfAdjointEigenSolver<Mat> es(g, Eigen::EigenvaluesOnly);
    const Vec& ev = es.eigenvalues();
    int neg = 0, pos = 0;
    for (int i = 0; i < ev.size(); ++i) {
        if (ev[i] < -1e-10) ++neg;
        else if (ev[i] > 1e-10) ++pos;
    }
    if (neg != 1 || pos != ev.size() - 1) {
        std::string s = "fundamental tensor has signature (";
        for (int i = 0; i < ev.size(); ++i) s += (i ? ", " : "") + std::to_string(ev[i]);
        throw SignatureError(s + ") instead of (-, +, ..., +)");
    }
}

MetricAt fundamental_tensor(const ModelSpec& m, const Vec& x, const Vec& v) {
    require_domain(m, x, v);
    const int n = m.n();
    const auto d = detail::basic_data<double>(m.tapes(), span_of(x), span_of(v));
    MetricAt r;
    r.base = x;
    r.reference = v;
    r.L = d.L;
    r.p = to_vec(d.p);
    r.g = to_mat(n, d.g);
    check_signature(r.g);
    r.g_inv = r.g.inverse();
    r.det_g = r.g.determinant();
    return r;
}

// ─── Causal character ─────────────────────────────────────────────────────────

std::string to_string(CausalClass c) {
    switch (c) {
        case CausalClass::Timelike: return "timelike";
        case CausalClass::Lightlike: return "lightlike";
        case CausalClass::Spacelike: return "spacelike";
        default: return "zero";
    }
}

std::string to_string(TimeOrientation o) {
    switch (o) {
        case TimeOrientation::Future: return "future";
        case TimeOrientation::Past: return "past";
        default: return "none";
    }
}

namespace {

/// v lies in the cone component of `seed`: negative pairing and a timelike
/// open segment from seed to v.
bool same_component(const ModelSpec& m, const Vec& x, const Vec& seed, const Vec& v) {
    if (!m.in_domain(span_of(x), span_of(seed))) return false;
    const auto d = detail::basic_data<double>(m.tapes(), span_of(x), span_of(seed));
    if (to_vec(d.p).dot(v) >= 0.0) return false;
    for (int k = 1; k < 16; ++k) {
        const double s = k / 16.0;
        const Vec w = (1.0 - s) * seed + s * v;
        if (!m.in_domain(span_of(x), span_of(w))) return false;
        if (m.lagrangian_at(span_of(x), span_of(w)) >= 0.0) return false;
    }
    return true;
}

}  // namespace

CausalInfo classify_causal(const ModelSpec& m, const Vec& x, const Vec& v) {
    CausalInfo info;
    if (v.size() != m.n() || x.size() != m.n()) throw Error("dimension mismatch");
    if (v.isZero(0.0)) return info;
    require_domain(m, x, v);
    info.L = m.lagrangian_at(span_of(x), span_of(v));
    const double band = 1e-12 * (1.0 + v.squaredNorm());
    if (std::abs(info.L) <= band) info.cls = CausalClass::Lightlike;
    else if (info.L < 0.0) info.cls = CausalClass::Timelike;
    else info.cls = CausalClass::Spacelike;
    if (info.cls == CausalClass::Spacelike) return info;
    info.F = std::sqrt(std::max(0.0, -2.0 * info.L));
    Vec X = to_vec(m.orientation_at(span_of(x)));
    X *= v.norm() / X.norm();
    if (same_component(m, x, X, v)) info.orientation = TimeOrientation::Future;
    else if (same_component(m, x, Vec(-X), v)) info.orientation = TimeOrientation::Past;
    return info;
}

bool is_future_timelike(const ModelSpec& m, const Vec& x, const Vec& v) {
    if (!m.in_domain(span_of(x), span_of(v))) return false;
    const CausalInfo c = classify_causal(m, x, v);
    return c.cls == CausalClass::Timelike && c.orientation == TimeOrientation::Future;
}

double finsler_norm(const ModelSpec& m, const Vec& x, const Vec& v) {
    const CausalInfo c = classify_causal(m, x, v);
    if (c.cls == CausalClass::Spacelike) throw NotTemporal("F is only defined on causal vectors");
    return c.F.value_or(0.0);
}

// ─── Connections ──────────────────────────────────────────────────────────────

ConnectionAt spray_and_connections(const ModelSpec& m, const Vec& x, const Vec& v) {
    require_domain(m, x, v);
    const int n = m.n();
    const auto c = detail::conn_data<double>(m.tapes(), span_of(x), span_of(v));
    ConnectionAt r;
    r.base = x;
    r.reference = v;
    r.g = to_mat(n, c.g);
    check_signature(r.g);
    r.g_inv = to_mat(n, c.ginv);
    r.spray = to_vec(c.G);
    r.nconn = to_mat(n, c.N);
    r.dspray_dx = to_mat(n, c.dGx);
    r.dgv = Tensor3(n);
    r.dgv.a = c.dgv;
    auto dgx = [&](int i, int j, int k) { return c.dgx[(i * n + j) * n + k]; };
    auto dgv = [&](int i, int j, int k) { return c.dgv[(i * n + j) * n + k]; };
    r.gamma = Tensor3(n);
    r.chern = Tensor3(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                double s = 0.0, t = 0.0;
                for (int l = 0; l < n; ++l) {
                    s += c.ginv[i * n + l] * (dgx(l, k, j) + dgx(j, l, k) - dgx(j, k, l));
                    double u = 0.0;
                    for (int q = 0; q < n; ++q)
                        u += dgv(l, k, q) * c.N[q * n + j] + dgv(j, l, q) * c.N[q * n + k] -
                             dgv(j, k, q) * c.N[q * n + l];
                    t += c.ginv[i * n + l] * u;
                }
                r.gamma(i, j, k) = 0.5 * s;
                r.chern(i, j, k) = 0.5 * s - 0.5 * t;
            }
    return r;
}

Vec covariant_derivative(const ModelSpec& m, const std::vector<Expr>& field, const Vec& x, const Vec& v,
                         const Vec& w) {
    const int n = m.n();
    if (static_cast<int>(field.size()) != n) throw Error("vector field needs n components");
    const ConnectionAt c = spray_and_connections(m, x, w);
    Vec X(n), out = Vec::Zero(n);
    const std::vector<double> zero(n, 0.0);
    for (int i = 0; i < n; ++i) {
        X[i] = (*compiled(field[i]))(span_of(x), zero)[0];
        for (int j = 0; j < n; ++j)
            out[i] += v[j] * (*compiled(differentiate(field[i], xvar(j))))(span_of(x), zero)[0];
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) out[i] += c.chern(i, j, k) * v[j] * X[k];
    return out;
}

// ─── Curvature ────────────────────────────────────────────────────────────────

CurvatureAt curvature_and_ricci(const ModelSpec& m, const Vec& x, const Vec& v) {
    require_domain(m, x, v);
    const int n = m.n();
    const int vars = 2 * n;
    std::vector<Jet> xj(n), vj(n);
    for (int i = 0; i < n; ++i) {
        xj[i] = Jet::variable(x[i], i, vars, 2);
        vj[i] = Jet::variable(v[i], n + i, vars, 2);
    }
    const auto s = detail::spray_data<Jet>(m.tapes(), xj, vj);
    // R^i_j = ∂_j G − ½ v^k ∂_k ∂_{v^j} G + ½ G^k ∂_{v^k} ∂_{v^j} G − N^i_k N^k_j.
    Mat N(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) N(i, j) = 0.5 * s.G[i].d(n + j);
    CurvatureAt r;
    r.R = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double val = s.G[i].d(j);
            for (int k = 0; k < n; ++k) {
                val -= 0.5 * v[k] * s.G[i].dd(k, n + j);
                val += 0.5 * s.G[k].value() * s.G[i].dd(n + k, n + j);
            }
            r.R(i, j) = val;
        }
    r.R -= N * N;
    r.ricci = r.R.trace();
    return r;
}

BerwaldReport berwald_diagnostic(const ModelSpec& m, const Vec& x, int sample_count, std::uint64_t seed) {
    if (sample_count < 2) throw InsufficientSamples("berwald diagnostic needs at least 2 samples");
    Rng rng(seed);
    std::vector<Tensor3> chern;
    for (int attempt = 0; attempt < 50 * sample_count && static_cast<int>(chern.size()) < sample_count;
         ++attempt) {
        const Vec v = gaussian_vector(m.n(), rng);
        if (!m.in_domain(span_of(x), span_of(v))) continue;
        try {
            chern.push_back(spray_and_connections(m, x, v).chern);
        } catch (const SignatureError&) {
        }
    }
    if (chern.size() < 2) throw InsufficientSamples("fewer than 2 in-domain velocities found");
    BerwaldReport r;
    r.samples = static_cast<int>(chern.size());
    for (std::size_t e = 0; e < chern[0].a.size(); ++e) {
        double lo = chern[0].a[e], hi = lo;
        for (const Tensor3& t : chern) {
            lo = std::min(lo, t.a[e]);
            hi = std::max(hi, t.a[e]);
        }
        r.max_fiber_variation = std::max(r.max_fiber_variation, hi - lo);
    }
    r.is_berwald_numerically = r.max_fiber_variation <= 1e-8;
    return r;
}

}  // namespace lfg
